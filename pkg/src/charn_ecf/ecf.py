"""Weighted L2 distance between joint and product empirical characteristic functions.

For a product weight ``W(t_0..t_k) = V_0(t_0) * prod_j V_j(t_j)`` the integral
collapses to pairwise sums of cosine transforms ``F[V](x) = int cos(t x) V(t) dt``::

    T_n = n * (A * B + P - 2 * sum_s w_s a_s b_s)

with ``a_s = sum_t w_t F0(e_s - e_t)``, ``b_s = sum_t w_t prod_j Fj(X_{s-j} - X_{t-j})``,
``A = w.a``, ``B = w.b`` and ``P = sum_{s,t} w_s w_t F0(.) prod_j Fj(.)``.
:func:`statistic_quadrature` evaluates the defining integral directly and is
kept as an oracle for small inputs.
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss

from . import _kernels

FAMILIES = ("laplace", "gauss")
DEFAULT_FAMILY = "gauss"
DEFAULT_GAMMA = 0.5
LAGUERRE_MAX = 150  # laggauss loses accuracy beyond ~180 nodes
LEGENDRE_MAX = 1600
LEGENDRE_SCALE = 15.0


@dataclass(frozen=True)
class WeightSpec:
    """Product weight with ``V_j(t) = exp(-gamma_j |t|)`` (laplace) or
    ``exp(-gamma_j t**2)`` (gauss); ``gammas[0]`` belongs to the residual
    coordinate, ``gammas[j]`` to lag ``j``."""

    family: str = DEFAULT_FAMILY
    gammas: tuple = (DEFAULT_GAMMA, DEFAULT_GAMMA)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}; expected one of {FAMILIES}")
        gammas = tuple(float(g) for g in np.atleast_1d(self.gammas))
        if len(gammas) < 2:
            raise ValueError("need gammas for the residual and at least one lag")
        if not all(g > 0 and math.isfinite(g) for g in gammas):
            raise ValueError("all gammas must be positive and finite")
        object.__setattr__(self, "gammas", gammas)

    @classmethod
    def uniform(cls, family=DEFAULT_FAMILY, gamma=DEFAULT_GAMMA, k=1):
        return cls(family, (gamma,) * (k + 1))

    @property
    def k(self):
        return len(self.gammas) - 1

    @property
    def family_id(self):
        return _kernels.FAMILY_IDS[self.family]


def weight_function(family, gamma, t):
    t = np.asarray(t, dtype=float)
    if family == "laplace":
        return np.exp(-gamma * np.abs(t))
    return np.exp(-gamma * t * t)


def cosine_transform(family, gamma, x):
    """``int cos(t x) V(t) dt`` for ``V = exp(-gamma|t|)`` or ``exp(-gamma t^2)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    if family == "laplace":
        out = 2.0 * gamma / (gamma * gamma + x * x)
    elif family == "gauss":
        out = math.sqrt(math.pi / gamma) * np.exp(-x * x / (4.0 * gamma))
    else:
        raise ValueError(f"unknown weight family {family!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StatisticInput:
    """Residuals, normalized weights and the lag matrix feeding ``T_n``."""

    eps_hat: np.ndarray
    weights: np.ndarray
    lags: np.ndarray
    weight: WeightSpec

    def __post_init__(self):
        eps = np.asarray(self.eps_hat, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        lags = np.asarray(self.lags, dtype=float)
        if lags.ndim == 1:
            lags = lags[:, None]
        if not (eps.shape[0] == w.shape[0] == lags.shape[0]):
            raise ValueError("eps_hat, weights and lags must have the same length")
        if lags.shape[1] != self.weight.k:
            raise ValueError(
                f"weight spec has {self.weight.k} lag gammas but lags has {lags.shape[1]} columns"
            )
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "eps_hat", eps)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lags", lags)

    @classmethod
    def from_residuals(cls, resid, series, weight):
        return cls(resid.eps_hat, resid.weights, series.lag_matrix(), weight)

    @property
    def n(self):
        return self.eps_hat.shape[0]

    def kept(self):
        """Entries with positive weight, as contiguous arrays."""
        mask = self.weights > 0
        if mask.sum() < 2:
            raise ValueError("degenerate input: fewer than two observations carry weight")
        return (
            np.ascontiguousarray(self.eps_hat[mask]),
            np.ascontiguousarray(self.lags[mask]),
            np.ascontiguousarray(self.weights[mask]),
        )


def _finish(n, big_a, big_b, pp, ss):
    value = n * (big_a * big_b + pp - 2.0 * ss)
    scale = n * (big_a * big_b + pp)
    if value < -1e-10 * max(1.0, scale):
        raise FloatingPointError(f"statistic evaluated to {value!r} < 0 beyond rounding")
    return max(value, 0.0)


def statistic_closed_form(inp, backend=None):
    """``T_n`` via pairwise cosine-transform sums, O(n^2 k) time.

    ``backend`` overrides the process-wide choice (``"numba"`` or ``"numpy"``).
    """
    eps, lags, w = inp.kept()
    gammas = np.asarray(inp.weight.gammas)
    fid = inp.weight.family_id
    if backend is None:
        sums = _kernels.ecf_sums(eps, lags, w, fid, gammas)
    elif backend == "numba":
        sums = _kernels.ecf_sums_numba(eps, lags, w, fid, gammas)
    elif backend == "numpy":
        sums = _kernels.ecf_sums_numpy(eps, lags, w, fid, gammas)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return _finish(inp.n, *sums)


def _rule(family, gamma, spread, nodes):
    """1-d nodes/weights integrating ``g(t) V(t)`` over the real line.

    Laplace: Gauss-Laguerre per half line for slowly oscillating integrands,
    otherwise Gauss-Legendre after mapping ``[0, 1)`` onto ``[0, inf)`` by
    ``u = c s / (1 - s)``, whose node count grows only linearly with the
    oscillation frequency.
    """
    if family == "gauss":
        omega = spread / math.sqrt(gamma)
        nodes = nodes or max(32, math.ceil(6.0 * omega) + 16)
        x, wt = hermgauss(nodes)
        return x / math.sqrt(gamma), wt / math.sqrt(gamma)
    omega = spread / gamma
    if nodes is None:
        nodes = math.ceil(20 + 10 * omega * omega) if omega <= 2 else math.ceil(30 + 28 * omega)
        use_laguerre = omega <= 2
    else:
        use_laguerre = nodes <= LAGUERRE_MAX
    if use_laguerre:
        x, wt = laggauss(nodes)
    else:
        nodes = min(nodes, LEGENDRE_MAX)
        s, ws = leggauss(nodes)
        s = 0.5 * (s + 1.0)
        x = LEGENDRE_SCALE * s / (1.0 - s)
        wt = 0.5 * ws * LEGENDRE_SCALE * np.exp(-x) / (1.0 - s) ** 2
    t = np.concatenate([-x[::-1], x]) / gamma
    return t, np.concatenate([wt[::-1], wt]) / gamma


def _half_rule(t, q):
    """Fold a symmetric rule onto ``t >= 0`` for integrands even in ``t``."""
    keep = t >= 0
    return t[keep], np.where(t[keep] > 0, 2.0 * q[keep], q[keep])


def statistic_quadrature(inp, nodes=None, max_lags=2):
    """``T_n`` by tensor-product quadrature of the defining integral.

    Gauss-Hermite handles the Gaussian weight, Gauss-Laguerre on each half-line
    the Laplace weight. ``nodes`` fixes the per-coordinate rule size (per half
    line for laplace); by default it grows with the spread of the data.
    Meant for small ``n`` and ``k <= 2``.
    """
    k = inp.weight.k
    if k > max_lags:
        raise ValueError(f"quadrature oracle supports k <= {max_lags} lags, got k={k}")
    eps, lags, w = inp.kept()
    cols = [eps] + [lags[:, j] for j in range(k)]
    rules = [
        _rule(inp.weight.family, g, float(np.ptp(c)), nodes)
        for g, c in zip(inp.weight.gammas, cols)
    ]
    # e_d[j, a] = exp(i t_a x_{j,d})
    # |joint - product|^2 is even under t -> -t, so t_0 runs over a half line
    rules[0] = _half_rule(*rules[0])
    phases = [np.exp(1j * np.outer(c, t)) for c, (t, _) in zip(cols, rules)]
    lag_block = phases[1]
    lag_q = rules[1][1]
    for ph, (_, q) in zip(phases[2:], rules[2:]):
        lag_block = (lag_block[:, :, None] * ph[:, None, :]).reshape(w.size, -1)
        lag_q = np.outer(lag_q, q).ravel()
    phi_lag = w @ lag_block
    t0_q = rules[0][1]
    e0 = phases[0]
    total = 0.0
    step = max(1, 2_000_000 // max(lag_block.shape[1], 1))
    for start in range(0, e0.shape[1], step):
        sl = slice(start, start + step)
        joint = (e0[:, sl] * w[:, None]).T @ lag_block
        phi_eps = w @ e0[:, sl]
        diff = joint - phi_eps[:, None] * phi_lag[None, :]
        total += t0_q[sl] @ (np.abs(diff) ** 2) @ lag_q
    return inp.n * float(total)


def compute_statistic(series, fitted, weight=None, resid=None, backend=None):
    """``T_n`` for ``series`` using the kernel estimates in ``fitted``."""
    from .estimation import residuals

    weight = weight or WeightSpec.uniform(k=series.lag_depth)
    resid = resid if resid is not None else residuals(fitted)
    return statistic_closed_form(StatisticInput.from_residuals(resid, series, weight), backend)
