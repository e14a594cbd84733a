from dataclasses import replace

import numpy as np
import pytest

from charn_ecf import (
    BootstrapConfig,
    FitConfig,
    SeriesTooShortError,
    TimeSeries,
    bootstrap_test,
    quantile,
    simulate,
    study_model,
)
from charn_ecf.bootstrap import _Context, bootstrap_series, p_value
from charn_ecf.ecf import WeightSpec
from charn_ecf.estimation import residuals
from charn_ecf.timeseries import SmoothedResidual, make_rng


@pytest.fixture
def small_boot():
    return BootstrapConfig(replicates=30, seed=5)


class TestQuantile:
    @pytest.mark.parametrize(
        "values, level, expected",
        [([1, 2, 3, 4], 0.5, 2.0), ([5], 0.95, 5.0), (list(range(1, 101)), 0.95, 95.0)],
    )
    def test_examples(self, values, level, expected):
        assert quantile(values, level) == expected

    def test_exact_product_is_not_rounded_up(self):
        # 0.95 * 200 is 190.00000000000003 in binary floating point
        assert quantile(np.arange(1, 201), 0.95) == 190.0

    @pytest.mark.parametrize("level", [0.0, 1.0, -0.1])
    def test_bad_level(self, level):
        with pytest.raises(ValueError):
            quantile([1.0, 2.0], level)

    def test_empty(self):
        with pytest.raises(ValueError):
            quantile([], 0.5)


def test_p_value_counts_ties():
    assert p_value(2.0, [1.0, 2.0, 3.0]) == pytest.approx(3 / 4)
    assert p_value(10.0, [1.0, 2.0, 3.0]) == pytest.approx(1 / 4)


class TestBootstrapTest:
    def test_single_replicate(self, ar_null_series):
        report = bootstrap_test(ar_null_series, boot=BootstrapConfig(replicates=1, seed=3))
        (t_star,) = report.bootstrap_statistics
        assert report.critical_value == t_star
        assert report.p_value in (0.5, 1.0)

    def test_report_fields(self, ar_null_series, small_boot):
        report = bootstrap_test(ar_null_series, boot=small_boot)
        assert report.statistic >= 0
        assert report.bootstrap_statistics.shape == (30,)
        assert np.all(report.bootstrap_statistics >= 0)
        assert 1 / 31 <= report.p_value <= 1
        assert report.reject == (report.statistic > report.critical_value)
        d = report.to_dict()
        assert d["config"]["n"] == 300 and d["config"]["kept_count"] <= 300
        assert d["config"]["smoothing_bandwidth"] == pytest.approx(300**-0.25)

    def test_deterministic(self, arch_null_series, small_boot):
        a = bootstrap_test(arch_null_series, boot=small_boot)
        b = bootstrap_test(arch_null_series, boot=small_boot)
        np.testing.assert_array_equal(a.bootstrap_statistics, b.bootstrap_statistics)
        assert a.statistic == b.statistic

    def test_seed_changes_draws(self, arch_null_series, small_boot):
        a = bootstrap_test(arch_null_series, boot=small_boot)
        b = bootstrap_test(arch_null_series, boot=replace(small_boot, seed=6))
        assert a.statistic == b.statistic
        assert not np.array_equal(a.bootstrap_statistics, b.bootstrap_statistics)

    def test_workers_do_not_change_result(self, ar_null_series):
        boot = BootstrapConfig(replicates=12, seed=1)
        serial = bootstrap_test(ar_null_series, boot=boot)
        parallel = bootstrap_test(ar_null_series, boot=boot, workers=3)
        np.testing.assert_array_equal(serial.bootstrap_statistics, parallel.bootstrap_statistics)

    def test_fast_mode_differs_but_is_valid(self, ar_null_series, small_boot):
        refit = bootstrap_test(ar_null_series, boot=small_boot)
        fast = bootstrap_test(ar_null_series, boot=replace(small_boot, refit=False))
        assert fast.statistic == refit.statistic
        assert np.all(np.isfinite(fast.bootstrap_statistics))
        assert not np.array_equal(fast.bootstrap_statistics, refit.bootstrap_statistics)

    @pytest.mark.parametrize("shrink", [False, True])
    @pytest.mark.parametrize("smoothing", ["n^-1/4", 0.0, 0.3])
    def test_smoothing_options(self, ar_null_series, shrink, smoothing):
        boot = BootstrapConfig(replicates=5, smoothing=smoothing, shrink=shrink)
        report = bootstrap_test(ar_null_series, boot=boot)
        assert report.bootstrap_statistics.size == 5

    def test_k2(self, ar_null_series, small_boot):
        report = bootstrap_test(ar_null_series, k=2, boot=small_boot)
        assert report.config["k"] == 2 and report.config["n"] == 299

    def test_weight_k_mismatch(self, ar_null_series):
        with pytest.raises(ValueError, match="lags"):
            bootstrap_test(ar_null_series, weight=WeightSpec("gauss", (1, 1, 1)))

    def test_too_short(self):
        series = TimeSeries(np.linspace(-1, 1, 12) ** 3)
        with pytest.raises(SeriesTooShortError, match="at least 20"):
            bootstrap_test(series)

    def test_too_few_kept(self, ar_null_series):
        cfg = FitConfig(truncation_quantile=0.05)
        with pytest.raises(SeriesTooShortError, match="truncation"):
            bootstrap_test(ar_null_series, fit_config=cfg)

    def test_detects_strong_dependence(self):
        series = simulate(study_model("AR_i", "alternative"), 300, rng_seed=2)
        report = bootstrap_test(series, boot=BootstrapConfig(replicates=60, seed=2))
        assert report.p_value < 0.05

    def test_alternative_levels_share_draws(self, ar_null_series, small_boot):
        report = bootstrap_test(ar_null_series, boot=small_boot)
        assert report.critical_value_at(0.05) == report.critical_value
        assert report.critical_value_at(0.10) <= report.critical_value_at(0.01)


class TestBootstrapSeries:
    def make_ctx(self, series, **boot):
        fitted = FitConfig().fit(series)
        resid = residuals(fitted)
        return _Context(
            fitted=fitted,
            law=SmoothedResidual(resid.pool, series.n**-0.25),
            values=np.asarray(series.values),
            k=1,
            n=series.n,
            weight=WeightSpec(),
            fit_config=FitConfig(),
            boot=BootstrapConfig(**boot),
        )

    def test_length_and_determinism(self, ar_null_series):
        ctx = self.make_ctx(ar_null_series)
        a = bootstrap_series(ctx, make_rng(9, 0))
        b = bootstrap_series(ctx, make_rng(9, 0))
        assert a.values.shape == ar_null_series.values.shape
        np.testing.assert_array_equal(a.values, b.values)

    def test_resembles_original_scale(self, ar_null_series):
        ctx = self.make_ctx(ar_null_series)
        sds = [bootstrap_series(ctx, make_rng(4, b)).values.std() for b in range(20)]
        assert np.median(sds) == pytest.approx(ar_null_series.values.std(), rel=0.35)
