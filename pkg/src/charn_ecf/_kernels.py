"""Hot numeric kernels, each in a numba-compiled and a pure-numpy flavour.

The public names at the bottom of the module (``nw_eval``, ``bootstrap_path``,
``ecf_sums``) dispatch to whichever backend :mod:`charn_ecf._backend` picked.
Both flavours are always importable so they can be compared against each other.

Kernel ids: 0 Epanechnikov, 1 quartic (biweight), 2 triweight; all supported
on [-1, 1]. Weight family ids: 0 Laplace, 1 Gaussian.
"""

import math

import numpy as np

from ._backend import BACKEND, njit

KERNEL_IDS = {"epanechnikov": 0, "quartic": 1, "triweight": 2}
FAMILY_IDS = {"laplace": 0, "gauss": 1}

# dense numpy fallbacks process at most this many matrix entries at once
_CHUNK_ENTRIES = 4_000_000
# beyond this many kept observations the numpy statistic streams row tiles
DENSE_LIMIT = 8000
LOG_SPACE_LAGS = 8


# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------


@njit
def _kernel_value(u, kernel_id):
    if u <= -1.0 or u >= 1.0:
        return 0.0
    v = 1.0 - u * u
    if kernel_id == 0:
        return 0.75 * v
    if kernel_id == 1:
        return 0.9375 * v * v
    return 1.09375 * v * v * v


@njit
def _nw_point(xs, ys, bandwidth, kernel_id, x, dens_floor, var_floor):
    n = xs.shape[0]
    lo = np.searchsorted(xs, x - bandwidth, side="left")
    hi = np.searchsorted(xs, x + bandwidth, side="right")
    s0 = 0.0
    s1 = 0.0
    for i in range(lo, hi):
        kv = _kernel_value((x - xs[i]) / bandwidth, kernel_id)
        s0 += kv
        s1 += kv * ys[i]
    scale = n * bandwidth
    dens = s0 / scale
    denom = dens if dens > dens_floor else dens_floor
    mean = (s1 / scale) / denom
    s2 = 0.0
    for i in range(lo, hi):
        kv = _kernel_value((x - xs[i]) / bandwidth, kernel_id)
        d = ys[i] - mean
        s2 += kv * d * d
    var = (s2 / scale) / denom
    if var < var_floor:
        var = var_floor
    return dens, mean, var


@njit
def nw_eval_numba(xs, ys, bandwidth, kernel_id, points, dens_floor, var_floor):
    m = points.shape[0]
    dens = np.empty(m)
    mean = np.empty(m)
    var = np.empty(m)
    for j in range(m):
        dens[j], mean[j], var[j] = _nw_point(
            xs, ys, bandwidth, kernel_id, points[j], dens_floor, var_floor
        )
    return dens, mean, var


@njit
def bootstrap_path_numba(
    xs, ys, bandwidth, kernel_id, dens_floor, var_floor, lo, hi, x0, innovations
):
    """Iterate X_j = m(X_{j-1}) + sigma(X_{j-1}) e_j with clamped evaluation.

    Returns the path and the index of the first non-finite state (-1 if none).
    """
    steps = innovations.shape[0]
    out = np.empty(steps)
    state = x0
    for j in range(steps):
        z = state
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        _, mean, var = _nw_point(xs, ys, bandwidth, kernel_id, z, dens_floor, var_floor)
        state = mean + math.sqrt(var) * innovations[j]
        if not math.isfinite(state):
            out[j:] = np.nan
            return out, j
        out[j] = state
    return out, -1


@njit
def _transform(family_id, gamma, d):
    if family_id == 0:
        return 2.0 * gamma / (gamma * gamma + d * d)
    return math.sqrt(math.pi / gamma) * math.exp(-d * d / (4.0 * gamma))


@njit
def _log_transform(family_id, gamma, d):
    if family_id == 0:
        return math.log(2.0 * gamma) - math.log(gamma * gamma + d * d)
    return 0.5 * math.log(math.pi / gamma) - d * d / (4.0 * gamma)


@njit
def ecf_sums_numba(eps, lags, weights, family_id, gammas):
    """Return (A, B, P, S) of the pairwise-sum representation.

    a_s = sum_t w_t F0(eps_s - eps_t), b_s = sum_t w_t prod_j Fj(lag diff),
    A = w.a, B = w.b, P = sum w_s w_t F0 * prod Fj, S = sum_s w_s a_s b_s.
    """
    n = eps.shape[0]
    k = lags.shape[1]
    a = np.zeros(n)
    b = np.zeros(n)
    pp = 0.0
    g0 = gammas[0]
    use_log = k > LOG_SPACE_LAGS
    diag0 = _transform(family_id, g0, 0.0)
    diagx = 1.0
    for j in range(k):
        diagx *= _transform(family_id, gammas[j + 1], 0.0)
    for s in range(n):
        ws = weights[s]
        a[s] += ws * diag0
        b[s] += ws * diagx
        pp += ws * ws * diag0 * diagx
        for t in range(s + 1, n):
            wt = weights[t]
            f0 = _transform(family_id, g0, eps[s] - eps[t])
            if use_log:
                acc = 0.0
                for j in range(k):
                    acc += _log_transform(family_id, gammas[j + 1], lags[s, j] - lags[t, j])
                fx = math.exp(acc)
            else:
                fx = 1.0
                for j in range(k):
                    fx *= _transform(family_id, gammas[j + 1], lags[s, j] - lags[t, j])
            a[s] += wt * f0
            a[t] += ws * f0
            b[s] += wt * fx
            b[t] += ws * fx
            pp += 2.0 * ws * wt * f0 * fx
    big_a = 0.0
    big_b = 0.0
    ss = 0.0
    for s in range(n):
        big_a += weights[s] * a[s]
        big_b += weights[s] * b[s]
        ss += weights[s] * a[s] * b[s]
    return big_a, big_b, pp, ss


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------


def _kernel_np(u, kernel_id):
    v = np.clip(1.0 - u * u, 0.0, None)
    if kernel_id == 0:
        return 0.75 * v
    if kernel_id == 1:
        return 0.9375 * v * v
    return 1.09375 * v * v * v


def nw_eval_numpy(xs, ys, bandwidth, kernel_id, points, dens_floor, var_floor):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    points = np.asarray(points, dtype=float)
    n = xs.shape[0]
    scale = n * bandwidth
    dens = np.empty(points.shape[0])
    mean = np.empty_like(dens)
    var = np.empty_like(dens)
    step = max(1, _CHUNK_ENTRIES // max(n, 1))
    for start in range(0, points.shape[0], step):
        sl = slice(start, start + step)
        kv = _kernel_np((points[sl, None] - xs[None, :]) / bandwidth, kernel_id)
        d = kv.sum(axis=1) / scale
        denom = np.maximum(d, dens_floor)
        m = (kv @ ys / scale) / denom
        resid = ys[None, :] - m[:, None]
        v = ((kv * resid * resid).sum(axis=1) / scale) / denom
        dens[sl] = d
        mean[sl] = m
        var[sl] = np.maximum(v, var_floor)
    return dens, mean, var


def bootstrap_path_numpy(
    xs, ys, bandwidth, kernel_id, dens_floor, var_floor, lo, hi, x0, innovations
):
    steps = innovations.shape[0]
    out = np.full(steps, np.nan)
    state = float(x0)
    point = np.empty(1)
    for j in range(steps):
        point[0] = min(max(state, lo), hi)
        _, mean, var = nw_eval_numpy(
            xs, ys, bandwidth, kernel_id, point, dens_floor, var_floor
        )
        state = mean[0] + math.sqrt(var[0]) * innovations[j]
        if not math.isfinite(state):
            return out, j
        out[j] = state
    return out, -1


def _transform_np(family_id, gamma, d):
    if family_id == 0:
        return 2.0 * gamma / (gamma * gamma + d * d)
    return math.sqrt(math.pi / gamma) * np.exp(-d * d / (4.0 * gamma))


def _lag_product_np(family_id, gammas, lags_rows, lags):
    k = lags.shape[1]
    if k > LOG_SPACE_LAGS:
        acc = np.zeros((lags_rows.shape[0], lags.shape[0]))
        for j in range(k):
            acc += np.log(
                _transform_np(family_id, gammas[j + 1], lags_rows[:, j, None] - lags[None, :, j])
            )
        return np.exp(acc)
    out = np.ones((lags_rows.shape[0], lags.shape[0]))
    for j in range(k):
        out *= _transform_np(family_id, gammas[j + 1], lags_rows[:, j, None] - lags[None, :, j])
    return out


def ecf_sums_numpy(eps, lags, weights, family_id, gammas, tile=None):
    eps = np.asarray(eps, dtype=float)
    lags = np.asarray(lags, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = eps.shape[0]
    if tile is None:
        tile = n if n <= DENSE_LIMIT else max(1, _CHUNK_ENTRIES // n)
    a = np.empty(n)
    b = np.empty(n)
    pp = 0.0
    for start in range(0, n, tile):
        sl = slice(start, start + tile)
        f0 = _transform_np(family_id, gammas[0], eps[sl, None] - eps[None, :])
        fx = _lag_product_np(family_id, gammas, lags[sl], lags)
        a[sl] = f0 @ weights
        b[sl] = fx @ weights
        pp += weights[sl] @ (f0 * fx) @ weights
    return weights @ a, weights @ b, pp, weights @ (a * b)


if BACKEND == "numba":
    nw_eval = nw_eval_numba
    bootstrap_path = bootstrap_path_numba
    ecf_sums = ecf_sums_numba
else:
    nw_eval = nw_eval_numpy
    bootstrap_path = bootstrap_path_numpy
    ecf_sums = ecf_sums_numpy
