"""Monte Carlo harness for size and power of the bootstrap independence test.

A cell is a (model, hypothesis, n) triple; every alpha in a cell is judged on
the same simulated series and the same bootstrap sample. Work units are
``(cell, replicate)`` pairs whose random streams depend only on the master
seed and the unit's coordinates, so tables do not change with the number of
worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import io
import math
import time

import numpy as np

from .bootstrap import BootstrapConfig, FitConfig, bootstrap_test
from .ecf import StatisticInput, WeightSpec, statistic_closed_form
from .estimation import residuals
from .exceptions import CharnError
from .timeseries import HYPOTHESES, MODEL_IDS, CharnModel, derive_seed, make_rng, simulate, study_model

CSV_FIELDS = ("model", "hypothesis", "n", "alpha", "M", "B", "reject_rate", "se", "seed")
DESK_N = (50, 100, 200)
PAPER_N = (50, 100, 200, 300, 400)
ALPHAS = (0.01, 0.05, 0.1)


@dataclass(frozen=True)
class ExperimentConfig:
    model_id: str = "AR_i"
    hypothesis: str = "null"
    n_list: tuple = DESK_N
    alphas: tuple = ALPHAS
    mc_replicates: int = 200
    boot: BootstrapConfig = field(default_factory=BootstrapConfig)
    weight: WeightSpec = field(default_factory=WeightSpec)
    fit_config: FitConfig = field(default_factory=FitConfig)
    master_seed: int = 0
    k: int = 1

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise ValueError(f"unknown model_id {self.model_id!r}")
        if self.hypothesis not in HYPOTHESES:
            raise ValueError(f"unknown hypothesis {self.hypothesis!r}")
        if self.mc_replicates < 1:
            raise ValueError("mc_replicates must be positive")
        if not all(0 < a < 1 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1)")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @classmethod
    def paper_scale(cls, model_id, hypothesis, **kwargs):
        """The full 400 x 400 grid over n = 50..400."""
        boot = kwargs.pop("boot", BootstrapConfig())
        return cls(model_id, hypothesis, n_list=PAPER_N, mc_replicates=400,
                   boot=replace(boot, replicates=400), **kwargs)


@dataclass
class RejectionTable:
    """Empirical rejection frequencies, one row per (model, hypothesis, n, alpha)."""

    rows: list
    wall_time: float = 0.0

    def rate(self, model, hypothesis, n, alpha):
        for row in self.rows:
            if (row["model"], row["hypothesis"], row["n"]) == (model, hypothesis, n) and math.isclose(
                row["alpha"], alpha
            ):
                return row["reject_rate"]
        raise KeyError((model, hypothesis, n, alpha))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            out = dict(row)
            out["reject_rate"] = f"{row['reject_rate']:.6f}"
            out["se"] = f"{row['se']:.6f}"
            writer.writerow(out)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append({
                "model": rec["model"],
                "hypothesis": rec["hypothesis"],
                "n": int(rec["n"]),
                "alpha": float(rec["alpha"]),
                "M": int(rec["M"]),
                "B": int(rec["B"]),
                "reject_rate": float(rec["reject_rate"]),
                "se": float(rec["se"]),
                "seed": int(rec["seed"]),
            })
        return cls(rows)

    def to_text(self):
        """Aligned blocks, one per (model, hypothesis): rows n, columns alpha."""
        blocks = []
        keys = list(dict.fromkeys((r["model"], r["hypothesis"]) for r in self.rows))
        for model, hyp in keys:
            sub = [r for r in self.rows if (r["model"], r["hypothesis"]) == (model, hyp)]
            alphas = sorted({r["alpha"] for r in sub})
            ns = sorted({r["n"] for r in sub})
            first = sub[0]
            lines = [f"{model} / {hyp}  (M={first['M']}, B={first['B']})"]
            lines.append(" " * 6 + "".join(f"{'alpha=' + format(a, 'g'):>17}" for a in alphas))
            for n in ns:
                cells = []
                for a in alphas:
                    r = next(r for r in sub if r["n"] == n and r["alpha"] == a)
                    cells.append(f"{r['reject_rate']:.4f} ({r['se']:.4f})".rjust(17))
                lines.append(f"n={n:>4}" + "".join(cells))
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def _unit(cfg, cell_key, n, r):
    """Simulate one series and test it; returns ``(T_n, [reject per alpha])``."""
    model = study_model(cfg.model_id, cfg.hypothesis)
    series = simulate(model, n, cfg.k, make_rng(cfg.master_seed, *cell_key, n, r, 0))
    boot = replace(cfg.boot, seed=derive_seed(cfg.master_seed, *cell_key, n, r, 1), workers=1)
    report = bootstrap_test(series, cfg.k, cfg.fit_config, cfg.weight, boot)
    return report.statistic, [report.reject_at(a) for a in cfg.alphas]


def _cell_key(cfg):
    return (MODEL_IDS.index(cfg.model_id), HYPOTHESES.index(cfg.hypothesis))


def _run_units(args):
    cfg, units = args
    out = []
    key = _cell_key(cfg)
    for n, r in units:
        try:
            out.append(_unit(cfg, key, n, r))
        except CharnError as exc:
            raise CharnError(
                f"{cfg.model_id}/{cfg.hypothesis} n={n} replicate={r}: {exc}"
            ) from exc
    return out


def run_experiment(cfgs, parallelism=1):
    """Rejection frequencies for one config or a sequence of configs."""
    if isinstance(cfgs, ExperimentConfig):
        cfgs = [cfgs]
    start = time.perf_counter()
    jobs = []
    for ci, cfg in enumerate(cfgs):
        for n in cfg.n_list:
            units = [(n, r) for r in range(cfg.mc_replicates)]
            jobs.append((ci, n, cfg, units))
    if parallelism <= 1:
        results = [_run_units((cfg, units)) for _, _, cfg, units in jobs]
    else:
        # split each cell so workers stay busy; results are reassembled by position
        pieces = []
        for idx, (_, _, cfg, units) in enumerate(jobs):
            size = max(1, math.ceil(len(units) / (2 * parallelism)))
            for s in range(0, len(units), size):
                pieces.append((idx, (cfg, units[s : s + size])))
        results = [[] for _ in jobs]
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for (idx, _), out in zip(pieces, pool.map(_run_units, [p for _, p in pieces])):
                results[idx].extend(out)
    rows = []
    for (ci, n, cfg, _), out in zip(jobs, results):
        rejects = np.array([rej for _, rej in out], dtype=bool)
        m = rejects.shape[0]
        for j, alpha in enumerate(cfg.alphas):
            p = float(rejects[:, j].mean())
            rows.append({
                "model": cfg.model_id,
                "hypothesis": cfg.hypothesis,
                "n": n,
                "alpha": alpha,
                "M": m,
                "B": cfg.boot.replicates,
                "reject_rate": p,
                "se": math.sqrt(p * (1.0 - p) / m),
                "seed": cfg.master_seed,
            })
    return RejectionTable(rows, wall_time=time.perf_counter() - start)


def mean_scaled_statistic(model, n, seeds, weight=None, fit_config=None, k=1):
    """Average of ``T_n / n`` over one simulated series per seed."""
    weight = weight or WeightSpec.uniform(k=k)
    fit_config = fit_config or FitConfig()
    values = []
    for seed in seeds:
        series = simulate(model, n, k, make_rng(seed, n))
        resid = residuals(fit_config.fit(series))
        t = statistic_closed_form(StatisticInput.from_residuals(resid, series, weight))
        values.append(t / n)
    return float(np.mean(values))


def consistency_probe(model_id, hypothesis="null", n_list=(100, 800), seeds=range(20),
                      weight=None, fit_config=None, k=1):
    """``[(n, mean T_n / n)]``; tends to 0 under the null and to a positive
    constant under a fixed alternative.

    ``model_id`` may also be a :class:`CharnModel`, in which case ``hypothesis``
    is ignored.
    """
    n_list = list(n_list)
    if len(n_list) < 2:
        raise ValueError("consistency_probe needs at least two sample sizes")
    model = model_id if isinstance(model_id, CharnModel) else study_model(model_id, hypothesis)
    seeds = list(seeds)
    return [(n, mean_scaled_statistic(model, n, seeds, weight, fit_config, k)) for n in n_list]
