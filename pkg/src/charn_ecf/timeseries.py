"""Series container, innovation laws and the CHARN data generator.

A CHARN(1) process follows ``X_j = m(X_{j-1}) + sigma(X_{j-1}) * e_j``.
The two study designs are exposed through :func:`study_model`:

* ``"AR_i"``: ``m(x) = 0.9 x``, ``sigma = 1``
* ``"ARCH_ii"``: ``m = 0``, ``sigma(x) = sqrt(1 + 0.25 x**2)``

Under the alternative the innovations are standardized Fernandez-Steel
skew-normal variates whose asymmetry is ``10 * X_{j-1}**2``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import DegenerateDataError, DivergenceError

HALF_NORMAL_MEAN = math.sqrt(2.0 / math.pi)
MODEL_IDS = ("AR_i", "ARCH_ii")
HYPOTHESES = ("null", "alternative")


def make_rng(seed, *key):
    """Independent Philox generator for stream ``key`` under ``seed``.

    Streams are addressed by position, so replicate ``(cell, r)`` gets the
    same numbers regardless of which worker computes it or in which order.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key):
    """A 63-bit integer seed for sub-stream ``key``, stable across platforms."""
    rng = make_rng(seed, *key)
    return int(rng.integers(0, 2**63 - 1))


@dataclass(frozen=True)
class TimeSeries:
    """Observations ``X_{-k+1}, ..., X_n`` with ``k`` pre-sample lags.

    ``values[i]`` holds ``X_{i-k+1}``.
    """

    values: np.ndarray
    lag_depth: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        k = int(self.lag_depth)
        if k < 0:
            raise ValueError("lag_depth must be nonnegative")
        if values.shape[0] < k + 1:
            raise ValueError(f"need at least {k + 1} values for lag_depth={k}")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite value at position {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lag_depth", k)

    @property
    def n(self):
        return self.values.shape[0] - self.lag_depth

    def _require_lag(self):
        if self.lag_depth < 1:
            raise ValueError("lag_depth >= 1 is needed to form (X_{j-1}, X_j) pairs")

    @property
    def predictors(self):
        """``X_0, ..., X_{n-1}``."""
        self._require_lag()
        k = self.lag_depth
        return self.values[k - 1 : k - 1 + self.n]

    @property
    def responses(self):
        """``X_1, ..., X_n``."""
        return self.values[self.lag_depth :]

    def lag_matrix(self):
        """Rows ``(X_{j-1}, ..., X_{j-k})`` for ``j = 1..n``."""
        self._require_lag()
        k, n = self.lag_depth, self.n
        return np.column_stack([self.values[k - nu : k - nu + n] for nu in range(1, k + 1)])


# ---------------------------------------------------------------------------
# innovation laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardNormal:
    def transform(self, state, u, z):
        return z


@dataclass(frozen=True)
class SmoothedResidual:
    """Kernel-smoothed residual law: ``e_I + h Z`` with ``I`` uniform on the pool.

    The pool is standardized (mean 0, variance 1 with ddof=0) on construction.
    With ``shrink=True`` draws are divided by ``sqrt(1 + h**2)`` so the
    smoothed law has unit variance.
    """

    residuals: np.ndarray
    h: float
    shrink: bool = False

    def __post_init__(self):
        pool = np.asarray(self.residuals, dtype=float).ravel()
        if pool.size == 0:
            raise ValueError("empty residual pool")
        if self.h < 0:
            raise ValueError("smoothing bandwidth h must be >= 0")
        sd = pool.std()
        if not sd > 0:
            raise DegenerateDataError("residual pool has zero spread")
        pool = (pool - pool.mean()) / sd
        pool.setflags(write=False)
        object.__setattr__(self, "residuals", pool)

    @property
    def scale(self):
        return 1.0 / math.sqrt(1.0 + self.h * self.h) if self.shrink else 1.0

    def transform(self, state, u, z):
        idx = np.minimum((np.asarray(u) * self.residuals.size).astype(np.intp), self.residuals.size - 1)
        return (self.residuals[idx] + self.h * z) * self.scale

    def sample(self, rng, size):
        u = rng.random(size)
        z = rng.standard_normal(size)
        return self.transform(None, u, z)


def fs_moments(gamma):
    """Mean and variance of the Fernandez-Steel skew normal with asymmetry ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    mean = HALF_NORMAL_MEAN * (gamma - 1.0 / gamma)
    second = (gamma**4 + gamma**-2) / (1.0 + gamma**2)
    return mean, second - mean**2


def fs_standardized(gamma, u, z):
    """Standardized Fernandez-Steel variate from a uniform ``u`` and normal ``z``.

    The positive half (scaled by ``gamma``) is chosen with probability
    ``gamma**2 / (1 + gamma**2)``; the negative half is scaled by ``1/gamma``.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("Fernandez-Steel asymmetry must be positive")
    absz = np.abs(z)
    positive = u < gamma**2 / (1.0 + gamma**2)
    raw = np.where(positive, gamma * absz, -absz / gamma)
    mean, var = fs_moments(gamma)
    return (raw - mean) / np.sqrt(var)


@dataclass(frozen=True)
class ConditionalSkewNormal:
    """Skew-normal innovation whose asymmetry is ``scale_coefficient * state**2``."""

    scale_coefficient: float = 10.0
    floor: float = 1e-3

    def gamma(self, state):
        return np.maximum(self.scale_coefficient * np.square(state), self.floor)

    def transform(self, state, u, z):
        return fs_standardized(self.gamma(state), u, z)


def draw_innovation(law, state, rng):
    """One innovation from ``law`` given the previous state."""
    u = rng.random()
    z = rng.standard_normal()
    return float(law.transform(state, u, z))


# ---------------------------------------------------------------------------
# models and simulation
# ---------------------------------------------------------------------------


def zero_mean(x):
    return 0.0


def ar_mean(x):
    return 0.9 * x


def unit_vol(x):
    return 1.0


def arch_vol(x):
    return math.sqrt(1.0 + 0.25 * x * x)


@dataclass(frozen=True)
class CharnModel:
    mean_fn: object
    vol_fn: object
    innovation: object = field(default_factory=StandardNormal)
    burn_in: int = 200
    initial_state: float = 0.0


def study_model(model_id, hypothesis="null", burn_in=200):
    """One of the two simulation-study designs under the null or the alternative."""
    if model_id == "AR_i":
        mean_fn, vol_fn = ar_mean, unit_vol
    elif model_id == "ARCH_ii":
        mean_fn, vol_fn = zero_mean, arch_vol
    else:
        raise ValueError(f"unknown model_id {model_id!r}; expected one of {MODEL_IDS}")
    if hypothesis == "null":
        law = StandardNormal()
    elif hypothesis == "alternative":
        law = ConditionalSkewNormal()
    else:
        raise ValueError(f"unknown hypothesis {hypothesis!r}; expected one of {HYPOTHESES}")
    return CharnModel(mean_fn, vol_fn, law, burn_in=burn_in)


def simulate(model, n, k=1, rng_seed=0):
    """Simulate ``n + k`` observations after discarding ``model.burn_in`` steps.

    ``rng_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1 or k < 0 or model.burn_in < 0:
        raise ValueError("need n >= 1, k >= 0, burn_in >= 0")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else make_rng(rng_seed)
    steps = model.burn_in + n + k
    u = rng.random(steps)
    z = rng.standard_normal(steps)
    out = np.empty(steps)
    state = float(model.initial_state)
    law = model.innovation
    for j in range(steps):
        vol = model.vol_fn(state)
        if not vol > 0:
            raise ValueError(f"vol_fn returned {vol} at step {j}; must be positive")
        state = model.mean_fn(state) + vol * float(law.transform(state, u[j], z[j]))
        if not math.isfinite(state):
            raise DivergenceError(j, f"simulation diverged at step {j}")
        out[j] = state
    return TimeSeries(out[model.burn_in :], k)
