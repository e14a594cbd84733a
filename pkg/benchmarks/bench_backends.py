"""Time the numba kernels against their pure-numpy fallbacks.

Usage: python benchmarks/bench_backends.py [--sizes 200,1000,2000] [--repeat 5]

Both flavours are called directly, so the CHARN_ECF_BACKEND setting does not
matter here. Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from charn_ecf import _kernels
from charn_ecf._backend import HAS_NUMBA


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(n, rng):
    x = np.sort(rng.normal(size=n))
    y = 0.9 * x + rng.normal(size=n)
    pts = np.linspace(-2, 2, n)
    c = 0.9 * x.std() * n ** -0.2
    eps = rng.normal(size=n)
    lags = rng.normal(size=(n, 1))
    w = np.full(n, 1 / n)
    g = np.array([0.5, 0.5])
    innov = rng.normal(size=n + 201)
    lo, hi = float(x[0]), float(x[-1])
    return {
        "nadaraya-watson": (
            lambda: _kernels.nw_eval_numba(x, y, c, 0, pts, 1e-8, 1e-8),
            lambda: _kernels.nw_eval_numpy(x, y, c, 0, pts, 1e-8, 1e-8),
        ),
        "ecf sums": (
            lambda: _kernels.ecf_sums_numba(eps, lags, w, 1, g),
            lambda: _kernels.ecf_sums_numpy(eps, lags, w, 1, g),
        ),
        "bootstrap path": (
            lambda: _kernels.bootstrap_path_numba(x, y, c, 0, 1e-8, 1e-8, lo, hi, 0.0, innov),
            lambda: _kernels.bootstrap_path_numpy(x, y, c, 0, 1e-8, 1e-8, lo, hi, 0.0, innov),
        ),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200,1000,2000")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; only the numpy column is meaningful")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>6}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, (fast, slow) in cases(n, rng).items():
            t_fast = best_of(fast, args.repeat)
            t_slow = best_of(slow, args.repeat)
            print(f"{name:<16}{n:>6}{t_fast * 1e3:>12.3f}{t_slow * 1e3:>12.3f}{t_slow / t_fast:>10.1f}")


if __name__ == "__main__":
    main()
