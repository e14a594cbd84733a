"""Smooth autoregressive residual bootstrap for the independence test.

Each replicate draws innovations from the kernel-smoothed law of the
standardized residuals, regenerates a series through the fitted recursion
``X*_j = m(X*_{j-1}) + sigma(X*_{j-1}) e*_j`` and recomputes the statistic.
Replicate ``b`` uses the random stream ``(seed, b, attempt)``, so results do not
depend on how replicates are spread over workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import logging
import math

import numpy as np

from . import _kernels
from .ecf import StatisticInput, WeightSpec, statistic_closed_form
from .estimation import (
    DENSITY_FLOOR,
    TRUNCATION_QUANTILE,
    VARIANCE_FLOOR,
    compute_residuals,
    fit,
    residuals,
)
from .exceptions import CharnError, DivergenceError, SeriesTooShortError
from .timeseries import SmoothedResidual, TimeSeries, make_rng

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING = "n^-1/4"


@dataclass(frozen=True)
class FitConfig:
    bandwidth: object = "silverman"
    kernel: str = "epanechnikov"
    truncation: float = None
    truncation_quantile: float = TRUNCATION_QUANTILE
    density_floor: float = DENSITY_FLOOR
    variance_floor: float = VARIANCE_FLOOR

    def fit(self, series):
        return fit(
            series, self.bandwidth, self.kernel, self.truncation,
            self.truncation_quantile, self.density_floor, self.variance_floor,
        )


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 200
    smoothing: object = DEFAULT_SMOOTHING
    burn_in: int = 200
    alpha: float = 0.05
    seed: int = 0
    refit: bool = True
    shrink: bool = False
    min_kept: int = 20
    max_divergent_fraction: float = 0.05
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one bootstrap replicate")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    def smoothing_bandwidth(self, n):
        if self.smoothing == DEFAULT_SMOOTHING:
            return n ** -0.25
        h = float(self.smoothing)
        if h < 0:
            raise ValueError("smoothing bandwidth must be nonnegative")
        return h


def quantile(sorted_values, level):
    """Order statistic at 1-based index ``ceil(level * B)``.

    This is the higher of the two candidate order statistics and so gives a
    conservative critical value.
    """
    values = np.asarray(sorted_values, dtype=float)
    if values.size == 0:
        raise ValueError("quantile of an empty sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    # guard against 0.95 * 200 = 190.00000000000003
    idx = math.ceil(level * values.size - 1e-9)
    return float(values[min(max(idx, 1), values.size) - 1])


@dataclass
class TestReport:
    statistic: float
    critical_value: float
    p_value: float
    alpha: float
    bootstrap_statistics: np.ndarray
    divergent: int = 0
    config: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def reject(self):
        return self.statistic > self.critical_value

    def critical_value_at(self, alpha):
        return quantile(np.sort(self.bootstrap_statistics), 1.0 - alpha)

    def reject_at(self, alpha):
        return self.statistic > self.critical_value_at(alpha)

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": bool(self.reject),
            "divergent_replicates": self.divergent,
            "bootstrap_statistics": [float(v) for v in self.bootstrap_statistics],
            "config": self.config,
        }


def p_value(statistic, boot_stats):
    boot_stats = np.asarray(boot_stats)
    return (1.0 + np.count_nonzero(boot_stats >= statistic)) / (boot_stats.size + 1.0)


@dataclass(frozen=True)
class _Context:
    """Everything a worker needs to run replicates; picklable."""

    fitted: object
    law: SmoothedResidual
    values: np.ndarray
    k: int
    n: int
    weight: WeightSpec
    fit_config: FitConfig
    boot: BootstrapConfig


def _statistic_on(series, fitted, weight):
    resid = residuals(fitted)
    return statistic_closed_form(StatisticInput.from_residuals(resid, series, weight))


def _replicate_statistic(ctx, boot_series):
    if ctx.boot.refit:
        return _statistic_on(boot_series, ctx.fit_config.fit(boot_series), ctx.weight)
    # fast mode: original estimates and truncation applied to the bootstrap data
    _, mean, var = ctx.fitted.evaluate(boot_series.predictors)
    resid = compute_residuals(boot_series, lambda _: mean, lambda _: np.sqrt(var), ctx.fitted.truncation)
    return statistic_closed_form(StatisticInput.from_residuals(resid, boot_series, ctx.weight))


def bootstrap_series(ctx, rng):
    """One bootstrap path of length ``n + k`` (raises DivergenceError)."""
    fitted = ctx.fitted
    steps = ctx.boot.burn_in + ctx.n + ctx.k
    x0 = ctx.values[rng.integers(ctx.values.size)]
    innovations = np.ascontiguousarray(ctx.law.sample(rng, steps))
    lo, hi = fitted.predictor_range
    path, bad = _kernels.bootstrap_path(
        fitted._xs, fitted._ys, float(fitted.bandwidth), fitted.kernel.kernel_id,
        float(fitted.density_floor), float(fitted.variance_floor),
        lo, hi, float(x0), innovations,
    )
    if bad >= 0:
        raise DivergenceError(int(bad))
    return TimeSeries(path[ctx.boot.burn_in :], ctx.k)


def _run_one(ctx, b):
    """``T*_b``, retrying once on a fresh stream; ``nan`` if both attempts fail."""
    for attempt in range(2):
        rng = make_rng(ctx.boot.seed, b, attempt)
        try:
            return _replicate_statistic(ctx, bootstrap_series(ctx, rng))
        except CharnError as exc:
            logger.debug("bootstrap replicate %d attempt %d failed: %s", b, attempt, exc)
    return math.nan


def _run_block(ctx, indices):
    return [_run_one(ctx, b) for b in indices]


def _run_replicates(ctx, workers):
    indices = list(range(ctx.boot.replicates))
    if workers <= 1:
        return np.array(_run_block(ctx, indices))
    blocks = [indices[i::workers] for i in range(workers)]
    out = np.empty(len(indices))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for block, stats in zip(blocks, pool.map(_run_block, [ctx] * workers, blocks)):
            out[block] = stats
    return out


def bootstrap_test(series, k=None, fit_config=None, weight=None, boot=None, workers=None):
    """Run the independence test on ``series`` with bootstrap calibration.

    ``k`` re-reads the observations with a different number of pre-sample lags
    when it differs from ``series.lag_depth``.
    """
    fit_config = fit_config or FitConfig()
    boot = boot or BootstrapConfig()
    if k is not None and k != series.lag_depth:
        series = TimeSeries(series.values, k)
    k = series.lag_depth
    if k < 1:
        raise ValueError("the test needs at least one lag (k >= 1)")
    weight = weight or WeightSpec.uniform(k=k)
    if weight.k != k:
        raise ValueError(f"weight spec covers {weight.k} lags but k={k}")
    if series.n < max(boot.min_kept, 2):
        raise SeriesTooShortError(
            f"series has n={series.n} usable observations; need at least {boot.min_kept}"
        )

    fitted = fit_config.fit(series)
    resid = residuals(fitted)
    if resid.kept_count < boot.min_kept:
        raise SeriesTooShortError(
            f"only {resid.kept_count} observations survive truncation; need at least {boot.min_kept}"
        )
    statistic = statistic_closed_form(StatisticInput.from_residuals(resid, series, weight))

    h = boot.smoothing_bandwidth(series.n)
    ctx = _Context(
        fitted=fitted,
        law=SmoothedResidual(resid.pool, h, boot.shrink),
        values=np.asarray(series.values),
        k=k,
        n=series.n,
        weight=weight,
        fit_config=fit_config,
        boot=boot,
    )
    raw = _run_replicates(ctx, boot.workers if workers is None else workers)
    failed = int(np.count_nonzero(np.isnan(raw)))
    if failed > boot.max_divergent_fraction * boot.replicates:
        raise DivergenceError(
            -1,
            f"{failed} of {boot.replicates} bootstrap replicates diverged "
            f"(limit {boot.max_divergent_fraction:.0%})",
        )
    stats = raw[~np.isnan(raw)]
    config = {
        "n": series.n,
        "k": k,
        "bandwidth": float(fitted.bandwidth),
        "bandwidth_rule": str(fit_config.bandwidth),
        "kernel": fitted.kernel.shape,
        "truncation": float(fitted.truncation),
        "kept_count": resid.kept_count,
        "smoothing_bandwidth": h,
        "weight": {"family": weight.family, "gammas": list(weight.gammas)},
        "bootstrap": asdict(boot),
    }
    return TestReport(
        statistic=statistic,
        critical_value=quantile(np.sort(stats), 1.0 - boot.alpha),
        p_value=float(p_value(statistic, stats)),
        alpha=boot.alpha,
        bootstrap_statistics=stats,
        divergent=failed,
        config=config,
    )
