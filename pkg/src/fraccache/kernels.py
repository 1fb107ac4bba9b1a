"""Hot numeric kernels.

Every kernel has a numba ``@njit`` implementation and a pure numpy (or pure
Python, for scalar special functions) fallback.  The backend is chosen once at
import time from the ``FRACCACHE_DISABLE_NUMBA`` environment variable and can
be overridden per call with ``backend="numpy"`` or ``backend="numba"``.

Both backends consume identical counter-based random streams, so a
simulation gives the same per-trial draws under either one.  Transcendental
functions come from different libm implementations, so the two backends agree
to within a few ulps but are not guaranteed to be bit-identical to each other.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    _HAVE_NUMBA = True
    # the system TBB is too old for numba; skip probing it
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

__all__ = [
    "NUMBA_ENABLED",
    "DIST_FIXED",
    "DIST_UNIFORM",
    "DIST_POISSON",
    "DIST_TABULATED",
    "DRAWS_PER_TRIAL",
    "resolve_backend",
    "stream_key",
    "counter_uniforms",
    "lower_gamma",
    "realized_quality",
    "tabulated_inverse_cdf",
]

_DISABLE = os.environ.get("FRACCACHE_DISABLE_NUMBA", "").strip().lower()
NUMBA_ENABLED = _HAVE_NUMBA and _DISABLE not in ("1", "true", "yes", "on")

DIST_FIXED = 0
DIST_UNIFORM = 1
DIST_POISSON = 2
DIST_TABULATED = 3

# content, radius (two words, the Poisson sampler uses both), fading
DRAWS_PER_TRIAL = 4

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53
_LN2 = math.log(2.0)

_GAMMA_EPS = 1e-16
_GAMMA_FPMIN = 1e-300
_GAMMA_MAXIT = 2000


def resolve_backend(backend=None):
    """Return ``"numba"`` or ``"numpy"`` for a requested backend name."""
    if backend is None:
        return "numba" if NUMBA_ENABLED else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def _maybe_njit(**kwargs):
    def wrap(fn):
        if _HAVE_NUMBA:
            return njit(**kwargs)(fn)
        return fn

    return wrap


# --------------------------------------------------------------------------
# counter-based uniforms (SplitMix64 finalizer over (key, counter))
# --------------------------------------------------------------------------


def _mix_int(z):
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed):
    """Derive the 64-bit stream key for an integer seed."""
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return _mix_int(seed ^ 0x5DEECE66D2B2B2B5)


def _counter_uniforms_numpy(key, counters):
    z = np.uint64(key) + (counters + np.uint64(1)) * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


if _HAVE_NUMBA:
    _U_GOLDEN = np.uint64(_GOLDEN)
    _U_MIX1 = np.uint64(_MIX1)
    _U_MIX2 = np.uint64(_MIX2)
    _U1 = np.uint64(1)
    _U11 = np.uint64(11)
    _U27 = np.uint64(27)
    _U30 = np.uint64(30)
    _U31 = np.uint64(31)

    @njit(cache=True, inline="always")
    def _uniform_nb(key, counter):
        z = key + (counter + _U1) * _U_GOLDEN
        z = (z ^ (z >> _U30)) * _U_MIX1
        z = (z ^ (z >> _U27)) * _U_MIX2
        z = z ^ (z >> _U31)
        return (np.float64(z >> _U11) + 0.5) * _TWO_M53

    @njit(cache=True)
    def _counter_uniforms_nb(key, counters, out):
        k = np.uint64(key)
        for j in range(counters.shape[0]):
            out[j] = _uniform_nb(k, counters[j])


def counter_uniforms(key, counters, backend=None):
    """Uniform(0, 1) variates, one per 64-bit counter, from stream ``key``.

    The value for a given ``(key, counter)`` pair does not depend on how the
    counters are batched, which is what makes chunked or parallel simulation
    reproducible.  Values lie strictly inside (0, 1).
    """
    counters = np.ascontiguousarray(counters, dtype=np.uint64)
    if resolve_backend(backend) == "numba":
        out = np.empty(counters.shape[0], dtype=np.float64)
        _counter_uniforms_nb(np.uint64(key), counters, out)
        return out
    return _counter_uniforms_numpy(key, counters)


# --------------------------------------------------------------------------
# lower incomplete gamma: series for t < s + 1, Lentz continued fraction else
# --------------------------------------------------------------------------


def _lower_gamma_py(s, t):
    if t <= 0.0:
        return 0.0
    log_prefactor = -t + s * math.log(t)
    if t < s + 1.0:
        ap = s
        delta = 1.0 / s
        total = delta
        for _ in range(_GAMMA_MAXIT):
            ap += 1.0
            delta *= t / ap
            total += delta
            if abs(delta) < abs(total) * _GAMMA_EPS:
                return total * math.exp(log_prefactor)
        return math.nan
    b = t + 1.0 - s
    c = 1.0 / _GAMMA_FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAXIT + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _GAMMA_FPMIN:
            d = _GAMMA_FPMIN
        c = b + an / c
        if abs(c) < _GAMMA_FPMIN:
            c = _GAMMA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            return math.gamma(s) - math.exp(log_prefactor) * h
    return math.nan


_lower_gamma_nb = _maybe_njit(cache=True)(_lower_gamma_py)


def lower_gamma(s, t, backend=None):
    """Unregularized lower incomplete gamma kernel (no argument checks).

    Returns NaN if neither expansion converges.
    """
    if resolve_backend(backend) == "numba":
        return _lower_gamma_nb(float(s), float(t))
    return _lower_gamma_py(float(s), float(t))


# --------------------------------------------------------------------------
# piecewise-linear pdf inverse CDF
# --------------------------------------------------------------------------


def _tab_inverse_scalar(u, grid, dens, cum):
    n = grid.shape[0]
    k = np.searchsorted(cum, u, side="right") - 1
    if k < 0:
        k = 0
    if k > n - 2:
        k = n - 2
    h = grid[k + 1] - grid[k]
    p0 = dens[k]
    slope = (dens[k + 1] - p0) / h
    rem = u - cum[k]
    if rem < 0.0:
        rem = 0.0
    disc = p0 * p0 + 2.0 * slope * rem
    if disc < 0.0:
        disc = 0.0
    denom = p0 + math.sqrt(disc)
    if denom <= 0.0:
        # zero density and zero residual mass: u sits on the node
        t = 0.0
    else:
        t = 2.0 * rem / denom
    if t > h:
        t = h
    return grid[k] + t


_tab_inverse_nb = _maybe_njit(cache=True, inline="always")(_tab_inverse_scalar)


def _tab_inverse_numpy(u, grid, dens, cum):
    n = grid.shape[0]
    k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, n - 2)
    h = grid[k + 1] - grid[k]
    p0 = dens[k]
    slope = (dens[k + 1] - p0) / h
    rem = np.maximum(u - cum[k], 0.0)
    disc = np.maximum(p0 * p0 + 2.0 * slope * rem, 0.0)
    denom = p0 + np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0.0, 2.0 * rem / denom, 0.0)
    return grid[k] + np.minimum(t, h)


def tabulated_inverse_cdf(u, grid, dens, cum, backend=None):
    """Invert the CDF of a piecewise-linear density.

    ``cum`` holds the normalized cumulative mass at each grid node.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if resolve_backend(backend) == "numba":
        return np.array([_tab_inverse_nb(x, grid, dens, cum) for x in u])
    return _tab_inverse_numpy(u, grid, dens, cum)


# --------------------------------------------------------------------------
# Monte Carlo trial kernel
# --------------------------------------------------------------------------


def _realized_quality_numpy(key, start, n, cum_pop, alpha, q, q_max, rate_scale,
                            snr_scale, beta, r0, dist_code, dist_par,
                            tab_grid, tab_dens, tab_cum):
    base = np.arange(start, start + n, dtype=np.uint64) * np.uint64(DRAWS_PER_TRIAL)
    u_content = _counter_uniforms_numpy(key, base)
    u_r1 = _counter_uniforms_numpy(key, base + np.uint64(1))
    u_fade = _counter_uniforms_numpy(key, base + np.uint64(3))

    idx = np.minimum(np.searchsorted(cum_pop, u_content, side="right"), cum_pop.shape[0] - 1)
    if dist_code == DIST_FIXED:
        r = np.full(n, dist_par[0])
    elif dist_code == DIST_UNIFORM:
        r = dist_par[0] * np.sqrt(u_r1)
    elif dist_code == DIST_POISSON:
        u_r2 = _counter_uniforms_numpy(key, base + np.uint64(2))
        r = dist_par[0] * np.maximum(u_r1, u_r2)
    else:
        r = _tab_inverse_numpy(u_r1, tab_grid, tab_dens, tab_cum)

    fading = -np.log(u_fade)
    a = alpha[idx]
    cached = a * q[idx]
    with np.errstate(divide="ignore"):
        # r == 0 only for a tabulated pdf with mass at the origin: infinite rate
        gain = snr_scale * fading / (r / r0) ** beta
    delivered = rate_scale * np.log1p(gain) / _LN2
    remainder = np.where(a >= 1.0, 0.0, np.minimum(delivered, q_max * (1.0 - a)))
    return cached + remainder


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _realized_quality_nb(key, start, n, cum_pop, alpha, q, q_max, rate_scale,
                             snr_scale, beta, r0, dist_code, dist_par,
                             tab_grid, tab_dens, tab_cum):
        out = np.empty(n, dtype=np.float64)
        k = np.uint64(key)
        last = cum_pop.shape[0] - 1
        stride = np.uint64(DRAWS_PER_TRIAL)
        for j in prange(n):
            c = (np.uint64(start) + np.uint64(j)) * stride
            u_content = _uniform_nb(k, c)
            u_r1 = _uniform_nb(k, c + np.uint64(1))
            u_fade = _uniform_nb(k, c + np.uint64(3))
            i = np.searchsorted(cum_pop, u_content, side="right")
            if i > last:
                i = last
            if dist_code == DIST_FIXED:
                r = dist_par[0]
            elif dist_code == DIST_UNIFORM:
                r = dist_par[0] * math.sqrt(u_r1)
            elif dist_code == DIST_POISSON:
                u_r2 = _uniform_nb(k, c + np.uint64(2))
                r = dist_par[0] * max(u_r1, u_r2)
            else:
                r = _tab_inverse_nb(u_r1, tab_grid, tab_dens, tab_cum)
            a = alpha[i]
            value = a * q[i]
            if a < 1.0:
                cap = q_max * (1.0 - a)
                if r <= 0.0:
                    value += cap
                else:
                    gain = snr_scale * (-math.log(u_fade)) / (r / r0) ** beta
                    delivered = rate_scale * math.log1p(gain) / _LN2
                    value += min(delivered, cap)
            out[j] = value
        return out


def realized_quality(key, start, n, cum_pop, alpha, q, q_max, rate_scale,
                     snr_scale, beta, r0, dist_code, dist_par,
                     tab_grid=None, tab_dens=None, tab_cum=None, backend=None):
    """Realized playback quality for trials ``start .. start + n - 1``.

    Trial ``t`` reads counters ``4t .. 4t + 3`` of the stream: content choice,
    two radius words and the fading power.  ``rate_scale`` is
    ``B[MHz] * T / A`` so that ``rate_scale * log2(1 + gain)`` is the
    deliverable quality in Mbps.
    """
    empty = np.zeros(1, dtype=np.float64)
    args = (
        np.uint64(key) if resolve_backend(backend) == "numba" else key,
        int(start),
        int(n),
        np.ascontiguousarray(cum_pop, dtype=np.float64),
        np.ascontiguousarray(alpha, dtype=np.float64),
        np.ascontiguousarray(q, dtype=np.float64),
        float(q_max),
        float(rate_scale),
        float(snr_scale),
        float(beta),
        float(r0),
        int(dist_code),
        np.ascontiguousarray(dist_par, dtype=np.float64),
        empty if tab_grid is None else np.ascontiguousarray(tab_grid, dtype=np.float64),
        empty if tab_dens is None else np.ascontiguousarray(tab_dens, dtype=np.float64),
        empty if tab_cum is None else np.ascontiguousarray(tab_cum, dtype=np.float64),
    )
    if resolve_backend(backend) == "numba":
        return _realized_quality_nb(*args)
    return _realized_quality_numpy(*args)
