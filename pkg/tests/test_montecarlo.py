from dataclasses import dataclass, replace
import math

import pytest

from charn_ecf import (
    BootstrapConfig,
    CharnError,
    CharnModel,
    ExperimentConfig,
    RejectionTable,
    consistency_probe,
    run_experiment,
)
from charn_ecf.montecarlo import CSV_FIELDS
from charn_ecf.timeseries import unit_vol

HALF_NORMAL_MEAN = math.sqrt(2 / math.pi)
HALF_NORMAL_SD = math.sqrt(1 - 2 / math.pi)


@dataclass(frozen=True)
class SignFlipLaw:
    """Centred half normal whose skew follows the sign of the previous state."""

    def transform(self, state, u, z):
        sign = 1.0 if state >= 0 else -1.0
        return sign * (abs(z) - HALF_NORMAL_MEAN) / HALF_NORMAL_SD


@pytest.fixture(scope="module")
def tiny_cfg():
    return ExperimentConfig(
        "ARCH_ii", "null", n_list=(30, 40), alphas=(0.05, 0.1), mc_replicates=4,
        boot=BootstrapConfig(replicates=10), master_seed=3,
    )


@pytest.fixture(scope="module")
def tiny_table(tiny_cfg):
    return run_experiment(tiny_cfg)


class TestRunExperiment:
    def test_rows(self, tiny_table):
        assert len(tiny_table.rows) == 4
        for row in tiny_table.rows:
            assert set(row) == set(CSV_FIELDS)
            assert row["M"] == 4 and row["B"] == 10
            p = row["reject_rate"]
            assert p * 4 == pytest.approx(round(p * 4))
            assert row["se"] == pytest.approx(math.sqrt(p * (1 - p) / 4))

    def test_larger_alpha_rejects_at_least_as_often(self, tiny_table):
        for n in (30, 40):
            assert tiny_table.rate("ARCH_ii", "null", n, 0.1) >= tiny_table.rate("ARCH_ii", "null", n, 0.05)

    def test_missing_cell(self, tiny_table):
        with pytest.raises(KeyError):
            tiny_table.rate("AR_i", "null", 30, 0.05)

    def test_parallelism_invariant(self, tiny_cfg, tiny_table):
        assert run_experiment(tiny_cfg, parallelism=3).to_csv() == tiny_table.to_csv()

    def test_deterministic_and_seeded(self, tiny_cfg, tiny_table):
        assert run_experiment(tiny_cfg).rows == tiny_table.rows
        other = run_experiment(replace(tiny_cfg, master_seed=4, n_list=(30,)))
        assert other.rows[0]["seed"] == 4

    def test_multiple_configs(self, tiny_cfg):
        cfgs = [replace(tiny_cfg, n_list=(30,)), replace(tiny_cfg, model_id="AR_i", n_list=(30,))]
        table = run_experiment(cfgs)
        assert [r["model"] for r in table.rows] == ["ARCH_ii", "ARCH_ii", "AR_i", "AR_i"]

    def test_error_names_the_cell(self, tiny_cfg):
        cfg = replace(tiny_cfg, n_list=(12,))
        with pytest.raises(CharnError, match=r"ARCH_ii/null n=12 replicate=0"):
            run_experiment(cfg)


class TestRejectionTable:
    def test_csv_round_trip(self, tiny_table):
        text = tiny_table.to_csv()
        assert text.splitlines()[0] == ",".join(CSV_FIELDS)
        again = RejectionTable.from_csv(text)
        assert again.to_csv() == text
        assert [r["reject_rate"] for r in again.rows] == [r["reject_rate"] for r in tiny_table.rows]

    def test_text(self, tiny_table):
        text = tiny_table.to_text()
        lines = text.splitlines()
        assert lines[0] == "ARCH_ii / null  (M=4, B=10)"
        assert "alpha=0.05" in lines[1] and "alpha=0.1" in lines[1]
        assert lines[2].startswith("n=  30") and lines[3].startswith("n=  40")
        assert len({len(line) for line in lines[1:]}) == 1


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"model_id": "AR_ii"}, {"hypothesis": "h1"}, {"mc_replicates": 0}, {"alphas": (0.0,)}],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)

    def test_paper_scale(self):
        cfg = ExperimentConfig.paper_scale("AR_i", "alternative")
        assert cfg.n_list == (50, 100, 200, 300, 400)
        assert cfg.mc_replicates == 400 and cfg.boot.replicates == 400


class TestConsistencyProbe:
    def test_needs_two_sizes(self):
        with pytest.raises(ValueError):
            consistency_probe("AR_i", n_list=(100,))

    def test_null_decays(self):
        (_, small), (_, large) = consistency_probe("AR_i", "null", (100, 800), range(10))
        assert large < small

    def test_alternative_stabilizes(self):
        (_, small), (_, large) = consistency_probe("ARCH_ii", "alternative", (100, 800), range(10))
        assert large > 0.5 * small

    def test_sign_dependent_law(self):
        model = CharnModel(lambda x: 0.5 * x, unit_vol, SignFlipLaw())
        (_, small), (_, large) = consistency_probe(model, n_list=(100, 800), seeds=range(10))
        assert small > 0 and large > 0
        assert 0.5 < large / small < 2
