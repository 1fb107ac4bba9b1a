"""Water-filling caching policies, the whole-content baseline and a grid oracle.

Substituting ``x_i = alpha_i q_i`` makes the cache constraint linear,
``sum x_i <= M / A``.  For fixed ``x_i`` the expected quality falls as
``alpha_i`` grows, so the optimum stores every cached fraction at ``q_max``
(``alpha_i = x_i / q_max``).  What remains is a separable concave problem in
``x``, solved by bisection on the common marginal gain (the water level).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .channel_model import BITS_PER_MBIT
from .distance import Fixed
from .quality_analytics import expected_delivered_quality, marginal_gain

__all__ = [
    "CachingPolicy",
    "invert_v_fixed",
    "invert_v_radial",
    "waterfill",
    "brute_force_policy",
    "baseline_whole_content",
]

_LN2 = math.log(2.0)
WATER_LEVEL_RTOL = 1e-9
INNER_XTOL = 1e-10
MAX_BRUTE_FORCE_CONTENTS = 4


@dataclass
class CachingPolicy:
    """Per-content cached fraction ``alpha`` and quality ``q``.

    ``x = alpha * q`` is the storage-per-``A`` spent on each content.  ``q`` is
    reported as ``q_max`` for uncached contents.  Solver diagnostics
    (``iterations``, ``residual``) are zero for policies not produced by
    bisection.
    """

    alpha: np.ndarray
    q: np.ndarray
    x: np.ndarray
    mu_star: float
    budget_used: float
    name: str = "fractional"
    iterations: int = 0
    residual: float = 0.0

    def to_dict(self, objective=None):
        out = {
            "name": self.name,
            "alpha": [float(v) for v in self.alpha],
            "q": [float(v) for v in self.q],
            "x": [float(v) for v in self.x],
            "mu_star": None if math.isnan(self.mu_star) else float(self.mu_star),
            "budget_used": float(self.budget_used),
        }
        if objective is not None:
            out["objective"] = float(objective)
        return out

    def to_json(self, objective=None, **kwargs):
        return json.dumps(self.to_dict(objective), **kwargs)

    @classmethod
    def from_dict(cls, data):
        alpha = np.asarray(data["alpha"], dtype=np.float64)
        q = np.asarray(data["q"], dtype=np.float64)
        return cls(
            alpha=alpha,
            q=q,
            x=np.asarray(data.get("x", alpha * q), dtype=np.float64),
            mu_star=math.nan if data.get("mu_star") is None else float(data["mu_star"]),
            budget_used=float(data["budget_used"]),
            name=data.get("name", "fractional"),
        )

    @property
    def n_cached(self):
        return int(np.count_nonzero(self.alpha > 0))


def _policy_from_x(x, lib, mu, name="fractional", iterations=0, residual=0.0):
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, lib.q_max)
    alpha = np.minimum(x / lib.q_max, 1.0)
    return CachingPolicy(
        alpha=alpha,
        q=np.full(lib.F, lib.q_max),
        x=x,
        mu_star=float(mu),
        budget_used=float(lib.A * x.sum()),
        name=name,
        iterations=iterations,
        residual=residual,
    )


def _x_from_threshold_fixed(k, r, lib, params):
    # invert k = (r/r0)^beta (2^(A q_max (1 - x/q_max) / (T B)) - 1) / snr_scale
    spectral = np.log1p(k * params.snr_scale / params.path_loss(r)) / _LN2
    x = lib.q_max - spectral * lib.T * params.B / (lib.A * BITS_PER_MBIT)
    return np.clip(x, 0.0, lib.q_max)


def invert_v_fixed(mu, i, r, lib, params):
    """Closed-form ``x`` with ``v_i(x) = mu`` at a fixed distance ``r``.

    Raises
    ------
    ValueError
        If ``mu > v_i(0)``; that content is not cached at this water level.
    """
    f_i = float(lib.popularity[i])
    mu = float(mu)
    if mu <= 0.0:
        return lib.q_max
    v0 = f_i * marginal_gain(0.0, Fixed(r), lib, params)
    if mu > v0:
        raise ValueError(f"mu={mu} exceeds v_{i}(0)={v0}: content {i} is not cached")
    k = -math.log1p(-mu / f_i)
    return float(_x_from_threshold_fixed(k, r, lib, params))


def _bisect_decreasing(fn, target, lo, hi, xtol):
    # largest-interval bisection for a decreasing fn; returns midpoint of final bracket
    f_lo = fn(lo)
    if f_lo <= target:
        return lo
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_v_radial(mu, i, dist, lib, params, xtol=None, method="auto"):
    """``x`` with ``v_i(x) = mu`` found by bisection on ``[0, q_max]``.

    Bisection stops when the bracket is narrower than ``1e-10 * q_max``.
    """
    f_i = float(lib.popularity[i])
    mu = float(mu)
    if mu <= 0.0:
        return lib.q_max
    v0 = f_i * marginal_gain(0.0, dist, lib, params, method)
    if mu > v0:
        raise ValueError(f"mu={mu} exceeds v_{i}(0)={v0}: content {i} is not cached")
    if xtol is None:
        xtol = INNER_XTOL * lib.q_max
    target = mu / f_i
    return _bisect_decreasing(
        lambda x: marginal_gain(x, dist, lib, params, method), target, 0.0, lib.q_max, xtol
    )


class _Allocator:
    """Maps a water level to the allocation ``x_i = v_i^{-1}(mu)`` (0 if uncached)."""

    def __init__(self, lib, params, dist):
        self.lib = lib
        self.params = params
        self.dist = dist
        self.popularity = lib.popularity
        self.h0 = marginal_gain(0.0, dist, lib, params)
        self.v0 = self.popularity * self.h0

    def __call__(self, mu):
        lib = self.lib
        x = np.zeros(lib.F)
        cached = mu <= self.v0
        if not np.any(cached):
            return x
        if isinstance(self.dist, Fixed):
            ratio = np.minimum(mu / self.popularity[cached], 1.0)
            with np.errstate(divide="ignore"):
                k = -np.log1p(-ratio)
            x[cached] = _x_from_threshold_fixed(k, self.dist.r, lib, self.params)
        else:
            # v_i / f_i is common to all contents; equal targets share one solve
            memo = {}
            for i in np.flatnonzero(cached):
                target = mu / self.popularity[i]
                if target not in memo:
                    memo[target] = _bisect_decreasing(
                        lambda z: marginal_gain(z, self.dist, lib, self.params),
                        target, 0.0, lib.q_max, INNER_XTOL * lib.q_max,
                    )
                x[i] = memo[target]
        return x


def waterfill(lib, params, dist, eps=None, max_iter=200):
    """Optimal fractional caching policy by bisection on the water level.

    The bracket starts at ``[0, v_1(0)]``.  At each midpoint ``mu`` every
    content gets ``x_i = v_i^{-1}(mu)`` (or 0 if ``mu > v_i(0)``); the lower end
    moves up while the cache is over-full.  The returned allocation is the one
    at the upper end, which always fits.

    Parameters
    ----------
    eps : float, optional
        Bracket width at which bisection stops; defaults to ``1e-9 * v_1(0)``.

    Returns
    -------
    CachingPolicy
        With ``iterations`` and ``residual = M / A - sum(x)`` (the under-fill).
    """
    budget = lib.budget
    if lib.F * lib.q_max <= budget:
        return _policy_from_x(np.full(lib.F, lib.q_max), lib, 0.0)
    alloc = _Allocator(lib, params, dist)
    a, b = 0.0, float(alloc.v0[0])
    if eps is None:
        eps = WATER_LEVEL_RTOL * b
    x_a = np.full(lib.F, lib.q_max)
    x_b = alloc(b)
    iterations = 0
    while b - a >= eps and iterations < max_iter:
        mu = 0.5 * (a + b)
        x_mu = alloc(mu)
        iterations += 1
        if x_mu.sum() > budget:
            a = mu
            x_a = x_mu
        else:
            b = mu
            x_b = x_mu
    # When v_i is flat to machine precision, x_i(mu) jumps across the final
    # bracket.  Every point on the segment between the two bracket-end
    # allocations has all marginals in [a, b], so fill the budget along it.
    spread = float(x_a.sum() - x_b.sum())
    slack = budget - float(x_b.sum())
    if spread > 0 and slack > 0:
        theta = min(slack / spread, 1.0)
        x_b = x_b + theta * (x_a - x_b)
    residual = budget - float(x_b.sum())
    if residual < 0:
        # rounding in the interpolation; shave the overshoot off the largest entry
        x_b[np.argmax(x_b)] += residual
        residual = budget - float(x_b.sum())
    return _policy_from_x(x_b, lib, b, iterations=iterations, residual=residual)


def _grid_gains(lib, params, dist, levels, n_steps, step):
    # G[j, n] = x_n + E_del(x_n / q_j) at x_n = n * step; -inf when x_n > q_j
    x = np.arange(n_steps + 1) * step
    table = np.full((len(levels), n_steps + 1), -np.inf)
    for j, q in enumerate(levels):
        for n, xn in enumerate(x):
            if xn > q * (1 + 1e-12):
                break
            alpha = min(xn / q, 1.0)
            table[j, n] = xn + expected_delivered_quality(alpha, dist, lib, params)
    return x, table


def brute_force_policy(lib, params, dist, grid_step=1e-3):
    """Exhaustive grid search over allocations ``x`` for tiny libraries.

    Every grid vector ``x_i in {0, h, 2h, ..., q_max}`` (``h = grid_step *
    q_max``) with ``sum x_i <= M / A`` is scored with the exact objective.
    Each content may store its fraction at ``q_min``, the mid quality or
    ``q_max`` (``alpha_i = x_i / q_i``); the best one per grid point is kept.

    The returned policy carries ``q_max_dominant``: True when ``q_max`` was
    never beaten by a lower quality at any grid point.

    Raises
    ------
    ValueError
        For more than four contents.
    """
    if lib.F > MAX_BRUTE_FORCE_CONTENTS:
        raise ValueError(
            f"brute force is limited to {MAX_BRUTE_FORCE_CONTENTS} contents, got {lib.F}"
        )
    n_steps = int(round(1.0 / grid_step))
    step = lib.q_max / n_steps
    levels = (lib.q_max, 0.5 * (lib.q_min + lib.q_max), lib.q_min)
    x, table = _grid_gains(lib, params, dist, levels, n_steps, step)
    best_level = np.argmax(table, axis=0)
    gain = table[best_level, np.arange(n_steps + 1)]
    q_max_dominant = bool(np.all(table[0] >= table[1:].max(axis=0) - 1e-15))

    max_units = int(math.floor(lib.budget / step * (1 + 1e-12)))
    f = lib.popularity
    # best value of the last content using at most n grid units
    last = f[-1] * gain
    last_arg = np.zeros(n_steps + 1, dtype=np.int64)
    for n in range(1, n_steps + 1):
        last_arg[n] = n if last[n] > last[last_arg[n - 1]] else last_arg[n - 1]
    last_best = last[last_arg]

    if lib.F == 1:
        n_last = int(last_arg[min(max_units, n_steps)])
        best_idx = (n_last,)
        best_value = float(last[n_last])
    else:
        best_value = -np.inf
        best_idx = None
        second = np.arange(n_steps + 1)
        lead_ranges = [range(n_steps + 1)] * (lib.F - 2)
        for lead in itertools.product(*lead_ranges):
            used = sum(lead)
            if used > max_units:
                continue
            head = math.fsum(f[i] * gain[n] for i, n in enumerate(lead))
            room = max_units - used
            n2 = second[: min(room, n_steps) + 1]
            rest = np.minimum(room - n2, n_steps)
            values = head + f[-2] * gain[n2] + last_best[rest]
            j = int(np.argmax(values))
            if values[j] > best_value:
                best_value = float(values[j])
                best_idx = lead + (int(n2[j]), int(last_arg[rest[j]]))

    idx = np.asarray(best_idx)
    q = np.asarray(levels)[best_level[idx]]
    xs = x[idx]
    alpha = np.where(xs > 0, np.minimum(xs / q, 1.0), 0.0)
    q = np.where(xs > 0, q, lib.q_max)
    policy = CachingPolicy(
        alpha=alpha,
        q=q,
        x=xs,
        mu_star=math.nan,
        budget_used=float(lib.A * xs.sum()),
        name="brute_force",
    )
    policy.q_max_dominant = q_max_dominant
    policy.grid_objective = float(best_value)
    return policy


def baseline_whole_content(lib, params, dist):
    """Conventional policy that caches whole contents only (``alpha_i in {0, 1}``).

    Contents are cached at ``q_max`` in popularity order while they fit.  The
    leftover budget ``L`` holds one more content at quality ``L / A`` when that
    quality is at least ``q_min`` and beats the expected delivered quality of an
    uncached content; otherwise it stays unused.
    """
    alpha = np.zeros(lib.F)
    q = np.full(lib.F, lib.q_max)
    full_size = lib.A * lib.q_max
    n_full = min(lib.F, int(math.floor(lib.M / full_size * (1 + 1e-12))))
    alpha[:n_full] = 1.0
    leftover = max(lib.M - n_full * full_size, 0.0)
    if n_full < lib.F and leftover > 0:
        e_del = expected_delivered_quality(0.0, dist, lib, params)
        q_left = min(leftover / lib.A, lib.q_max)
        if q_left >= lib.q_min and q_left > e_del:
            alpha[n_full] = 1.0
            q[n_full] = q_left
    x = alpha * q
    return CachingPolicy(
        alpha=alpha,
        q=q,
        x=x,
        mu_star=math.nan,
        budget_used=float(lib.A * x.sum()),
        name="whole_content",
    )
