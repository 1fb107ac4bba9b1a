"""Expected playback quality, increment rates and the radial outage integral.

The expected quality of content ``i`` cached as fraction ``alpha`` at quality
``q`` is

    g(alpha, q) = alpha * q + E[min(C T / A, q_max (1 - alpha))],

with the expectation over Rayleigh fading ``u ~ Exp(1)`` and, for random
device placement, the distance ``r``.  The fading integral splits exactly at
the outage threshold ``k = l(alpha) (r / r0)**beta``: below it the delivered
quality is ``C(u) T / A``, above it the remainder arrives at ``q_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .channel_model import threshold_k, threshold_l
from .content_model import check_feasible
from .distance import DistanceModel, Fixed, PoissonDisk, UniformDisk

__all__ = [
    "QUAD_EPSABS",
    "QUAD_EPSREL",
    "adaptive_quad",
    "lower_incomplete_gamma",
    "radial_outage_integral",
    "success_probability",
    "expected_delivered_quality",
    "expected_transcoded_quality",
    "eval_g",
    "objective",
    "marginal_gain",
    "increment_rate_fixed",
    "increment_rate_radial",
    "IncrementCurve",
]

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
_QUAD_LIMIT = 200
_LN2 = math.log(2.0)
# exp(-80) is below any tolerance used here
_FADING_CUTOFF = 80.0
_EXP_UNDERFLOW = 745.0


def adaptive_quad(f, a, b, points=(), epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    """Integrate ``f`` over ``[a, b]`` with adaptive Gauss-Kronrod (QUADPACK).

    ``points`` are split locations; each piece is integrated separately.
    """
    if b <= a:
        return 0.0
    edges = [a] + sorted(p for p in set(points) if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=_QUAD_LIMIT)
        total += value
    return total


def lower_incomplete_gamma(s, t):
    """Lower incomplete gamma ``gamma(s, t) = int_0^t exp(-z) z**(s-1) dz``.

    Power series for ``t < s + 1`` and a Lentz continued fraction for the
    complement otherwise.
    """
    s = float(s)
    t = float(t)
    if not s > 0:
        raise ValueError(f"shape must be positive, got {s}")
    if not t >= 0:
        raise ValueError(f"upper limit must be non-negative, got {t}")
    value = kernels.lower_gamma(s, t)
    if math.isnan(value):
        raise FloatingPointError(f"incomplete gamma did not converge at s={s}, t={t}")
    return value


def _radial_closed_form(lam, R, beta):
    s = 2.0 / beta
    t = lam * R**beta
    if t == 0.0:
        return 1.0
    return 2.0 / (beta * R**2 * lam**s) * lower_incomplete_gamma(s, t)


def _radial_quadrature(lam, dist, beta):
    lo, hi = dist.support
    if lam == 0.0:
        upper = hi
        scale = None
    else:
        scale = lam ** (-1.0 / beta)
        upper = min(hi, scale * _EXP_UNDERFLOW ** (1.0 / beta))
    points = list(dist.breakpoints())
    if scale is not None:
        points += [scale * c for c in (0.25, 0.5, 1.0, 2.0, 4.0)]
    return adaptive_quad(
        lambda r: math.exp(-lam * r**beta) * float(dist.pdf(r)), lo, upper, points
    )


def radial_outage_integral(l, dist, beta, r0=1.0, method="auto"):
    """``E_r[exp(-l (r / r0)**beta)]``, the probability of full-quality delivery.

    This is the expected success probability for threshold ``l``; the
    derivative of the delivered quality in ``alpha`` is ``-q_max`` times it.

    Parameters
    ----------
    l : float
        Distance-free threshold, non-negative.
    dist : DistanceModel
    beta, r0 : float
        Path-loss exponent and reference distance.
    method : {"auto", "closed", "quad"}
        ``"closed"`` uses the incomplete-gamma form, valid for the disk laws.
        ``"quad"`` integrates against the pdf.  ``"auto"`` picks the closed
        form when available.
    """
    l = float(l)
    if not l >= 0:
        raise ValueError(f"threshold must be non-negative, got {l}")
    if l == 0.0:
        return 1.0
    lam = l / r0**beta
    if isinstance(dist, Fixed):
        return math.exp(-lam * dist.r**beta)
    disk = isinstance(dist, (UniformDisk, PoissonDisk))
    if method == "closed" or (method == "auto" and disk):
        if not disk:
            raise ValueError(f"no closed form for {dist.describe()}")
        return _radial_closed_form(lam, dist.R, beta)
    if method not in ("auto", "quad"):
        raise ValueError(f"unknown method {method!r}")
    return _radial_quadrature(lam, dist, beta)


def success_probability(alpha, dist, lib, params, method="auto"):
    """Probability that the uncached remainder of fraction ``alpha`` arrives at ``q_max``."""
    return radial_outage_integral(threshold_l(alpha, lib, params), dist, params.beta, params.r0, method)


def _fading_expectation(path_loss, k, cap, scale, rate_scale, snr_scale):
    # int_0^k scale * rate(u) e^-u du + cap e^-k at a fixed inverse channel gain
    if k <= 0.0:
        return cap
    if path_loss == 0.0:
        return cap
    gain = snr_scale / path_loss
    coef = scale * rate_scale / _LN2
    upper = min(k, _FADING_CUTOFF)
    body = adaptive_quad(
        lambda u: coef * math.log1p(gain * u) * math.exp(-u),
        0.0,
        upper,
        points=(1.0, 5.0, 20.0, 50.0),
    )
    return body + cap * math.exp(-k)


def _check_alpha_scalar(alpha):
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _delivery_expectation(alpha, dist, lib, params, transcoded):
    cap = lib.q_max if transcoded else lib.q_max * (1.0 - alpha)
    scale = 1.0 / (1.0 - alpha) if transcoded else 1.0
    l = threshold_l(alpha, lib, params)
    rate_scale = params.rate_scale(lib)
    snr_scale = params.snr_scale

    def inner(r):
        s = (r / params.r0) ** params.beta
        return _fading_expectation(s, l * s, cap, scale, rate_scale, snr_scale)

    if isinstance(dist, Fixed):
        return inner(dist.r)
    lo, hi = dist.support
    points = list(dist.breakpoints())
    if l > 0:
        # radius where the outage threshold crosses the bulk of Exp(1)
        r_c = params.r0 * l ** (-1.0 / params.beta)
        points += [r_c * c for c in (0.5, 1.0, 2.0, (_FADING_CUTOFF) ** (1.0 / params.beta))]
    return adaptive_quad(lambda r: float(dist.pdf(r)) * inner(r), lo, hi, points)


def expected_delivered_quality(alpha, dist, lib, params, method="nested"):
    """``E[min(C T / A, q_max (1 - alpha))]`` in Mbps.

    ``method="nested"`` integrates over fading (split at the outage
    threshold) and then against the distance pdf.  ``method="marginal"``
    integrates the success probability, ``q_max * int_alpha^1 P(a) da``,
    which follows from the derivative in ``alpha`` and is used as a cross
    check.
    """
    alpha = _check_alpha_scalar(alpha)
    if alpha == 1.0:
        return 0.0
    if method == "nested":
        return _delivery_expectation(alpha, dist, lib, params, transcoded=False)
    if method == "marginal":
        return lib.q_max * adaptive_quad(
            lambda a: success_probability(a, dist, lib, params), alpha, 1.0
        )
    raise ValueError(f"unknown method {method!r}")


def expected_transcoded_quality(alpha, dist, lib, params):
    """``E[min(C T / (A (1 - alpha)), q_max)]``: quality of the delivered remainder."""
    alpha = _check_alpha_scalar(alpha)
    if alpha == 1.0:
        raise ValueError("nothing is delivered when alpha = 1")
    return _delivery_expectation(alpha, dist, lib, params, transcoded=True)


def _check_quality(alpha, q, lib, tol=1e-12):
    if alpha > 0 and not (lib.q_min * (1 - tol) <= q <= lib.q_max * (1 + tol)):
        raise ValueError(f"quality {q} outside [{lib.q_min}, {lib.q_max}]")


def eval_g(alpha, q, dist, lib, params, method="nested"):
    """Expected quality g(alpha, q) of one content, in Mbps."""
    alpha = _check_alpha_scalar(alpha)
    q = float(q)
    _check_quality(alpha, q, lib)
    cached = alpha * q if alpha > 0 else 0.0
    return cached + expected_delivered_quality(alpha, dist, lib, params, method)


def objective(policy, dist, lib, params, form="g"):
    """Popularity-weighted expected quality of a caching policy.

    ``policy`` is anything with ``alpha`` and ``q`` arrays (or an
    ``(alpha, q)`` pair).  ``form="g"`` sums ``f_i g(alpha_i, q_i)``;
    ``form="transcoded"`` evaluates the delivered part as
    ``(1 - alpha_i) E[min(C T / (A (1 - alpha_i)), q_max)]``.

    Raises
    ------
    CacheConstraintError
        If the policy does not fit in the cache.
    """
    if hasattr(policy, "alpha"):
        alpha, q = policy.alpha, policy.q
    else:
        alpha, q = policy
    alpha = np.asarray(alpha, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if alpha.shape != (lib.F,) or q.shape != (lib.F,):
        raise ValueError(f"policy must have {lib.F} entries")
    check_feasible(alpha, q, lib)
    if form not in ("g", "transcoded"):
        raise ValueError(f"unknown form {form!r}")

    memo = {}
    terms = []
    for f_i, a, qi in zip(lib.popularity, alpha, q):
        a = _check_alpha_scalar(a)
        _check_quality(a, qi, lib)
        cached = a * qi if a > 0 else 0.0
        if a == 1.0:
            delivered = 0.0
        elif form == "g":
            if a not in memo:
                memo[a] = expected_delivered_quality(a, dist, lib, params)
            delivered = memo[a]
        else:
            if a not in memo:
                memo[a] = expected_transcoded_quality(a, dist, lib, params)
            delivered = (1.0 - a) * memo[a]
        terms.append(f_i * (cached + delivered))
    return math.fsum(terms)


def _check_x(x, lib):
    x = float(x)
    if not 0.0 <= x <= lib.q_max:
        raise ValueError(f"x must lie in [0, q_max={lib.q_max}], got {x}")
    return x


def marginal_gain(x, dist, lib, params, method="auto"):
    """Popularity-free increment rate ``v_i(x) / f_i``; identical for every content."""
    x = _check_x(x, lib)
    alpha = min(x / lib.q_max, 1.0)
    if isinstance(dist, Fixed):
        return -math.expm1(-threshold_k(alpha, dist.r, lib, params))
    return 1.0 - success_probability(alpha, dist, lib, params, method)


def increment_rate_fixed(x, i, r, lib, params):
    """Marginal gain ``f_i (1 - exp(-k(x / q_max)))`` of content ``i`` at distance ``r``."""
    x = _check_x(x, lib)
    k = threshold_k(min(x / lib.q_max, 1.0), r, lib, params)
    return float(lib.popularity[i]) * -math.expm1(-k)


def increment_rate_radial(x, i, dist, lib, params, method="auto"):
    """Marginal gain ``f_i (1 - E_r[exp(-l(x / q_max) (r / r0)**beta)])`` for random placement."""
    return float(lib.popularity[i]) * marginal_gain(x, dist, lib, params, method)


@dataclass
class IncrementCurve:
    """Increment rate ``v_i`` of one content as a callable on ``[0, q_max]``."""

    index: int
    dist: DistanceModel
    lib: object
    params: object
    v0: float = field(init=False)

    def __post_init__(self):
        self.popularity = float(self.lib.popularity[self.index])
        self.v0 = self(0.0)

    def __call__(self, x):
        return self.popularity * marginal_gain(x, self.dist, self.lib, self.params)
