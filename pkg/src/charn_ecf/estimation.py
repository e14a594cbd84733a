"""Nadaraya-Watson estimates of the density, mean and variance functions.

All three estimates at a point share the same kernel sums::

    f(x)   = sum_j K((x - X_{j-1}) / c) / (n c)
    m(x)   = sum_j K(.) X_j / (n c) / f(x)
    s2(x)  = sum_j K(.) (X_j - m(x))**2 / (n c) / f(x)

Denominators are floored at ``density_floor`` and the variance at
``variance_floor``. Residuals carry indicator truncation weights on
``[-a_n, a_n]``.
"""

from dataclasses import dataclass, field
import numpy as np

from . import _kernels
from .exceptions import DegenerateDataError, DegenerateTruncationError

DENSITY_FLOOR = 1e-8
VARIANCE_FLOOR = 1e-8
TRUNCATION_QUANTILE = 0.975


@dataclass(frozen=True)
class KernelSpec:
    """Compactly supported symmetric kernel on ``[-1, 1]``."""

    shape: str = "epanechnikov"

    def __post_init__(self):
        if self.shape not in _kernels.KERNEL_IDS:
            raise ValueError(
                f"unknown kernel {self.shape!r}; expected one of {sorted(_kernels.KERNEL_IDS)}"
            )

    @property
    def kernel_id(self):
        return _kernels.KERNEL_IDS[self.shape]

    @property
    def support_halfwidth(self):
        return 1.0

    def __call__(self, u):
        return _kernels._kernel_np(np.asarray(u, dtype=float), self.kernel_id)


def _spread(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise DegenerateDataError("bandwidth selection needs at least 2 values")
    sd = values.std(ddof=1)
    q75, q25 = np.percentile(values, [75, 25])
    iqr = (q75 - q25) / 1.34
    candidates = [s for s in (sd, iqr) if s > 0]
    if not candidates:
        raise DegenerateDataError("values have zero spread; bandwidth undefined")
    return min(candidates)


def silverman_bandwidth(values):
    """Silverman's rule of thumb ``0.9 * min(sd, IQR / 1.34) * n ** (-1/5)``.

    When the IQR vanishes but the standard deviation does not (heavy ties),
    the standard deviation alone is used.
    """
    return 0.9 * _spread(values) * np.asarray(values).size ** -0.2


def power_bandwidth(values, rho):
    """Silverman's constant with a user-chosen rate, ``c ~ n ** (-rho)``."""
    if rho <= 0:
        raise ValueError("bandwidth exponent must be positive")
    return 0.9 * _spread(values) * np.asarray(values).size ** -rho


def resolve_bandwidth(rule, values):
    """Bandwidth from ``rule``: a positive float, ``"silverman"``,
    ``"fixed:<c>"`` or ``"power:<rho>"``."""
    if isinstance(rule, (int, float)):
        if not rule > 0:
            raise ValueError("bandwidth must be positive")
        return float(rule)
    name, _, arg = str(rule).partition(":")
    if name == "silverman" and not arg:
        return silverman_bandwidth(values)
    if name == "fixed":
        return resolve_bandwidth(float(arg), values)
    if name == "power":
        return power_bandwidth(values, float(arg))
    raise ValueError(f"unrecognised bandwidth rule {rule!r}")


def truncation_bound(predictors, quantile=TRUNCATION_QUANTILE):
    return float(np.quantile(np.abs(predictors), quantile))


@dataclass(frozen=True, eq=False)
class FittedCharn:
    """Kernel estimates built from the pairs ``(X_{j-1}, X_j)`` of a series."""

    source: object
    bandwidth: float
    kernel: KernelSpec
    truncation: float
    density_floor: float = DENSITY_FLOOR
    variance_floor: float = VARIANCE_FLOOR
    _xs: np.ndarray = field(init=False, repr=False)
    _ys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.source.n < 2:
            raise ValueError("kernel estimation needs n >= 2")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        order = np.argsort(self.source.predictors, kind="stable")
        object.__setattr__(self, "_xs", np.ascontiguousarray(self.source.predictors[order]))
        object.__setattr__(self, "_ys", np.ascontiguousarray(self.source.responses[order]))

    @property
    def predictor_range(self):
        return float(self._xs[0]), float(self._xs[-1])

    def evaluate(self, x):
        """``(f_hat, m_hat, sigma2_hat)`` at each point of ``x``."""
        pts = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))
        return _kernels.nw_eval(
            self._xs, self._ys, float(self.bandwidth), self.kernel.kernel_id,
            pts, float(self.density_floor), float(self.variance_floor),
        )

    def density_hat(self, x):
        return _shape_like(self.evaluate(x)[0], x)

    def mean_hat(self, x):
        return _shape_like(self.evaluate(x)[1], x)

    def var_hat(self, x):
        return _shape_like(self.evaluate(x)[2], x)


def _shape_like(values, x):
    return float(values[0]) if np.ndim(x) == 0 else values.reshape(np.shape(x))


def fit(series, bandwidth="silverman", kernel="epanechnikov", truncation=None,
        truncation_quantile=TRUNCATION_QUANTILE, density_floor=DENSITY_FLOOR,
        variance_floor=VARIANCE_FLOOR):
    """Fit the kernel estimates on ``series``.

    ``truncation`` is an absolute ``a_n`` (``np.inf`` disables truncation);
    by default the ``truncation_quantile`` of ``|X_{j-1}|`` is used.
    """
    kernel = kernel if isinstance(kernel, KernelSpec) else KernelSpec(kernel)
    predictors = series.predictors
    c = resolve_bandwidth(bandwidth, predictors)
    a_n = truncation_bound(predictors, truncation_quantile) if truncation is None else float(truncation)
    return FittedCharn(series, c, kernel, a_n, density_floor, variance_floor)


def density_hat(fit, x):
    return fit.density_hat(x)


def mean_hat(fit, x):
    return fit.mean_hat(x)


def var_hat(fit, x):
    return fit.var_hat(x)


@dataclass(frozen=True)
class ResidualSet:
    """Residuals, normalized truncation weights and standardized residuals.

    ``eps_tilde`` is NaN where the truncation weight is zero.
    """

    eps_hat: np.ndarray
    weights: np.ndarray
    eps_tilde: np.ndarray
    kept_count: int

    @property
    def kept(self):
        return self.weights > 0

    @property
    def pool(self):
        """Standardized residuals at the kept indices."""
        return self.eps_tilde[self.kept]


def compute_residuals(series, mean_fn, vol_fn, truncation):
    """Residuals for given (vectorized) mean and volatility functions."""
    x_prev = series.predictors
    eps_hat = (series.responses - mean_fn(x_prev)) / vol_fn(x_prev)
    kept = np.abs(x_prev) <= truncation
    kept_count = int(kept.sum())
    if kept_count < 2:
        raise DegenerateTruncationError(
            f"only {kept_count} observation(s) inside [-{truncation:g}, {truncation:g}]; need >= 2"
        )
    weights = np.where(kept, 1.0 / kept_count, 0.0)
    sub = eps_hat[kept]
    sd = sub.std()
    eps_tilde = np.full_like(eps_hat, np.nan)
    if sd > 0:
        eps_tilde[kept] = (sub - sub.mean()) / sd
    else:
        eps_tilde[kept] = 0.0
    return ResidualSet(eps_hat, weights, eps_tilde, kept_count)


def residuals(fit):
    """Residuals ``(X_j - m(X_{j-1})) / sigma(X_{j-1})`` with truncation weights."""
    _, mean, var = fit.evaluate(fit.source.predictors)
    return compute_residuals(
        fit.source, lambda _: mean, lambda _: np.sqrt(var), fit.truncation
    )
