"""Monte Carlo estimate of the expected playback quality of a caching policy.

Each trial draws a requested content from the popularity law, a device
distance and one block-fading power, then applies the delivery rule: the
cached fraction plays at ``q_i`` and the remainder at
``min(C T / (A (1 - alpha_i)), q_max)``.

Trial ``t`` of seed ``s`` always reads the same counter-based random words, so
estimates do not depend on chunk size, thread count or backend scheduling.
The reduction uses exact (``math.fsum``) sums and is order-insensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .content_model import check_feasible
from .policy_optimizer import waterfill

__all__ = ["SimEstimate", "simulate_quality", "cross_evaluate", "DEFAULT_CHUNK"]

DEFAULT_CHUNK = 1 << 20


@dataclass(frozen=True)
class SimEstimate:
    """Sample mean of realized quality and its standard error (Mbps)."""

    mean: float
    std_error: float
    n_trials: int
    seed: int

    def within(self, value, n_sigma=3.0):
        return abs(self.mean - value) <= n_sigma * self.std_error

    def to_dict(self):
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_trials": self.n_trials,
            "seed": self.seed,
        }


def _trial_values(policy, dist, lib, params, seed, start, n, backend):
    code, par, grid, dens, cum = dist.kernel_spec()
    cum_pop = np.cumsum(lib.popularity)
    cum_pop[-1] = 1.0
    return kernels.realized_quality(
        kernels.stream_key(seed),
        start,
        n,
        cum_pop,
        policy.alpha,
        policy.q,
        lib.q_max,
        params.rate_scale(lib),
        params.snr_scale,
        params.beta,
        params.r0,
        code,
        par,
        grid,
        dens,
        cum,
        backend=backend,
    )


def simulate_quality(policy, dist, lib, params, n_trials=1_000_000, seed=0,
                     backend=None, chunk=DEFAULT_CHUNK, return_samples=False):
    """Estimate the objective of ``policy`` by simulating ``n_trials`` requests.

    Parameters
    ----------
    policy : CachingPolicy
        Anything with ``alpha`` and ``q`` arrays ordered like ``lib.popularity``.
    backend : {"numba", "numpy"}, optional
        Kernel backend; defaults to the process-wide choice.
    chunk : int
        Trials per kernel call.  Has no effect on the result.
    return_samples : bool
        Also return the per-trial realized qualities.

    Raises
    ------
    CacheConstraintError
        If the policy does not fit in the cache.
    """
    n_trials = int(n_trials)
    if n_trials < 1:
        raise ValueError("need at least one trial")
    check_feasible(policy.alpha, policy.q, lib)
    seed = int(seed)

    # shift by the first chunk's mean to keep the variance sum well conditioned
    shift = None
    sum_d = []
    sum_d2 = []
    samples = [] if return_samples else None
    for start in range(0, n_trials, chunk):
        n = min(chunk, n_trials - start)
        values = _trial_values(policy, dist, lib, params, seed, start, n, backend)
        if shift is None:
            shift = math.fsum(values) / n
        d = values - shift
        sum_d.append(math.fsum(d))
        sum_d2.append(math.fsum(d * d))
        if samples is not None:
            samples.append(values)

    total_d = math.fsum(sum_d)
    mean_d = total_d / n_trials
    mean = shift + mean_d
    if n_trials > 1:
        ss = math.fsum(sum_d2) - total_d * mean_d
        var = max(ss, 0.0) / (n_trials - 1)
        std_error = math.sqrt(var / n_trials)
    else:
        std_error = 0.0
    estimate = SimEstimate(mean=mean, std_error=std_error, n_trials=n_trials, seed=seed)
    if return_samples:
        return estimate, np.concatenate(samples)
    return estimate


def cross_evaluate(opt_dist, eval_dist, lib, params, n_trials=1_000_000, seed=0,
                   backend=None, policy=None):
    """Optimize for ``opt_dist`` and measure the policy where devices follow ``eval_dist``.

    ``policy`` may be supplied to skip the solve (e.g. the baseline policy).
    """
    if policy is None:
        policy = waterfill(lib, params, opt_dist)
    return simulate_quality(policy, eval_dist, lib, params, n_trials, seed, backend)
