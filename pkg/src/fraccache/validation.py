"""Oracle checks behind ``fraccache validate`` and the acceptance tests.

Each check returns a :class:`CheckResult`; sizes can be reduced for a quick
run, while the defaults are the full acceptance settings.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel_model import ChannelParams
from .content_model import ContentLibrary
from .config import DEFAULT_DISTANCE_GRID_M, DEFAULT_SNR_GRID_DB
from .distance import Fixed, UniformDisk, from_mean_distance
from .monte_carlo import simulate_quality
from .policy_optimizer import baseline_whole_content, brute_force_policy, waterfill
from .quality_analytics import (
    eval_g,
    marginal_gain,
    objective,
    radial_outage_integral,
    success_probability,
)

__all__ = [
    "TREND_R0_M",
    "CheckResult",
    "check_oracle_optimality",
    "check_analytic_vs_simulation",
    "check_derivative_identities",
    "check_gamma_closed_form",
    "check_water_level",
    "check_trends",
    "run_all",
]

# Reference distance at which the default operating point is neither
# outage-dominated nor saturated (k(0) ~ 23 at 40 m instead of ~125 at r0 = 1 m).
TREND_R0_M = 1.75


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} [{self.seconds:.1f}s]"


def _timed(name, fn, *args, **kwargs):
    t0 = time.perf_counter()
    passed, detail = fn(*args, **kwargs)
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def _random_library(rng, F, grid_step):
    pop = rng.uniform(0.05, 1.0, F)
    pop /= pop.sum()
    # binding budget on the brute-force grid
    units = int(round(rng.uniform(0.2, 0.8) * F / grid_step))
    units = max(1, min(units, int(F / grid_step) - 1))
    return ContentLibrary(pop, M=units * grid_step * 1.0)


def _oracle_optimality(F_values, seed, grid_step, r0_values, time_limit):
    rng = np.random.default_rng(seed)
    worst = math.inf
    t0 = time.perf_counter()
    cases = 0
    for r0 in r0_values:
        params = ChannelParams.from_db(r0_m=r0)
        dist = Fixed(40.0)
        for F in F_values:
            lib = _random_library(rng, F, grid_step)
            wf = objective(waterfill(lib, params, dist), dist, lib, params)
            bf_policy = brute_force_policy(lib, params, dist, grid_step)
            bf = objective(bf_policy, dist, lib, params)
            worst = min(worst, wf - bf)
            cases += 1
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-4 and elapsed < time_limit
    return ok, f"{cases} cases, min(waterfill - brute force) = {worst:.3e} Mbps (>= -1e-4), {elapsed:.1f}s (< {time_limit:g}s)"


def check_oracle_optimality(F_values=(1, 2, 3), seed=2024, grid_step=1e-3,
                            r0_values=(1.0, TREND_R0_M), time_limit=30.0):
    """Water-filling is at least as good as an exhaustive grid search."""
    return _timed("oracle_optimality", _oracle_optimality, F_values, seed, grid_step, r0_values, time_limit)


def _analytic_vs_sim(n_trials, seed, time_limit):
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db()
    parts = []
    ok = True
    t0 = time.perf_counter()
    for dist in (Fixed(40.0), UniformDisk(60.0)):
        for policy in (waterfill(lib, params, dist), baseline_whole_content(lib, params, dist)):
            exact = objective(policy, dist, lib, params)
            est = simulate_quality(policy, dist, lib, params, n_trials, seed)
            z = (est.mean - exact) / est.std_error
            ok &= abs(z) <= 3.0
            parts.append(f"{dist.kind}/{policy.name} z={z:+.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < time_limit
    return ok, f"{', '.join(parts)}; n={n_trials}, {elapsed:.1f}s (< {time_limit:g}s)"


def check_analytic_vs_simulation(n_trials=1_000_000, seed=7, time_limit=60.0):
    """Analytic objective within 3 standard errors of the simulated mean."""
    return _timed("analytic_vs_simulation", _analytic_vs_sim, n_trials, seed, time_limit)


def _derivative_identities(n_points, seed, step, rtol, min_slope):
    rng = np.random.default_rng(seed)
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db(r0_m=TREND_R0_M)
    worst = {"fixed": 0.0, "uniform": 0.0}
    skipped = 0
    for kind in worst:
        accepted = 0
        while accepted < n_points:
            alpha = rng.uniform(0.01, 0.99)
            dist = Fixed(rng.uniform(10, 60)) if kind == "fixed" else UniformDisk(rng.uniform(20, 90))
            exact = -lib.q_max * success_probability(alpha, dist, lib, params)
            # below this slope the central difference is dominated by rounding
            if abs(exact) < min_slope * lib.q_max:
                skipped += 1
                continue
            q = rng.uniform(lib.q_min + 0.01, lib.q_max - 0.01)
            x = alpha * q
            hi = eval_g(alpha + step, x / (alpha + step), dist, lib, params)
            lo = eval_g(alpha - step, x / (alpha - step), dist, lib, params)
            fd = (hi - lo) / (2 * step)
            worst[kind] = max(worst[kind], abs(fd - exact) / abs(exact))
            accepted += 1
    ok = all(v <= rtol for v in worst.values())
    return ok, (
        f"max rel err fixed {worst['fixed']:.2e}, radial {worst['uniform']:.2e} "
        f"(<= {rtol:g}) over {n_points} points each, {skipped} draws with |slope| < {min_slope:g} q_max skipped"
    )


def check_derivative_identities(n_points=200, seed=11, step=1e-6, rtol=1e-6, min_slope=1e-4):
    """dg/dalpha at fixed x equals -q_max times the success probability."""
    return _timed("derivative_identities", _derivative_identities, n_points, seed, step, rtol, min_slope)


def _gamma_closed_form(n_l, R, atol):
    worst = 0.0
    dist = UniformDisk(R)
    for beta in (2.0, 3.0, 4.0):
        for l in np.logspace(-6, 1, n_l):
            closed = radial_outage_integral(l, dist, beta, method="closed")
            quad = radial_outage_integral(l, dist, beta, method="quad")
            worst = max(worst, abs(closed - quad))
    return worst < atol, f"max |closed - quadrature| = {worst:.2e} (< {atol:g}) over {3 * n_l} points"


def check_gamma_closed_form(n_l=71, R=60.0, atol=1e-8):
    """Incomplete-gamma closed form of the disk outage integral against quadrature."""
    return _timed("gamma_closed_form", _gamma_closed_form, n_l, R, atol)


def water_level_violations(policy, lib, params, dist, tol_rel=1e-6):
    """List the ways a water-filling output breaks the equal-marginal conditions."""
    problems = []
    v = lib.popularity * np.array([marginal_gain(x, dist, lib, params) for x in policy.x])
    v0 = lib.popularity * marginal_gain(0.0, dist, lib, params)
    tol = tol_rel * v0[0]
    mu = policy.mu_star
    for i, x in enumerate(policy.x):
        if 0 < x < lib.q_max and abs(v[i] - mu) > tol:
            problems.append(f"content {i}: |v - mu| = {abs(v[i] - mu):.2e}")
        if x == 0 and v0[i] > mu + tol:
            problems.append(f"content {i} uncached with v(0) - mu = {v0[i] - mu:.2e}")
    used = lib.A * policy.x.sum()
    if used > lib.M * (1 + 1e-12):
        problems.append(f"cache overfull by {used - lib.M:.2e} Mbit")
    binding = lib.F * lib.q_max > lib.budget
    underfill = lib.budget - policy.x.sum()
    if binding and underfill > tol_rel * lib.budget:
        problems.append(f"under-fill {underfill:.2e} > {tol_rel * lib.budget:.2e}")
    return problems


def _water_level(snr_values, r0_values):
    lib = ContentLibrary.zipf(20, 1.0)
    cases = 0
    problems = []
    for r0 in r0_values:
        for snr in snr_values:
            params = ChannelParams.from_db(psi_db=snr, r0_m=r0)
            for dist in (Fixed(40.0), UniformDisk(60.0)):
                policy = waterfill(lib, params, dist)
                problems += water_level_violations(policy, lib, params, dist)
                cases += 1
    detail = f"{cases} solves, {len(problems)} violations"
    if problems:
        detail += f" (first: {problems[0]})"
    return not problems, detail


def check_water_level(snr_values=(10.0, 25.0, 35.0), r0_values=(1.0, TREND_R0_M)):
    """Equal marginals at the water level, cache feasibility and bounded under-fill."""
    return _timed("water_level", _water_level, snr_values, r0_values)


def trend_profile(axis, values, kind, r0=TREND_R0_M):
    """Solve the default library along a sweep; returns per-point diagnostics."""
    lib = ContentLibrary.zipf(20, 1.0)
    out = []
    for value in values:
        psi_db = value if axis == "snr_db" else 25.0
        mean = value if axis == "mean_distance_m" else 40.0
        params = ChannelParams.from_db(psi_db=psi_db, r0_m=r0)
        dist = from_mean_distance(kind, mean)
        policy = waterfill(lib, params, dist)
        base = baseline_whole_content(lib, params, dist)
        out.append(
            {
                "value": value,
                "policy": policy,
                "n_cached": policy.n_cached,
                "q_max": lib.q_max,
                "proposed": objective(policy, dist, lib, params),
                "baseline": objective(base, dist, lib, params),
            }
        )
    return out


def _trends(kinds, r0):
    failures = []
    for kind in kinds:
        snr = trend_profile("snr_db", DEFAULT_SNR_GRID_DB, kind, r0)
        dist = trend_profile("mean_distance_m", DEFAULT_DISTANCE_GRID_M, kind, r0)
        counts_snr = [p["n_cached"] for p in snr]
        counts_d = [p["n_cached"] for p in dist]
        if any(b < a for a, b in zip(counts_snr, counts_snr[1:])):
            failures.append(f"(a) {kind}: cached count not non-decreasing in SNR {counts_snr}")
        if any(b > a for a, b in zip(counts_d, counts_d[1:])):
            failures.append(f"(a) {kind}: cached count not non-increasing in distance {counts_d}")
        for p in snr + dist:
            pol = p["policy"]
            if np.any(np.diff(pol.alpha) > 1e-9):
                failures.append(f"(b) {kind} at {p['value']}: alpha increases with index")
            if p["proposed"] < p["baseline"]:
                failures.append(f"(c) {kind} at {p['value']}: proposed below baseline")
            if not np.all(pol.q[pol.alpha > 0] == p["q_max"]):
                failures.append(f"(d) {kind} at {p['value']}: q != q_max")
        gaps = [p["proposed"] - p["baseline"] for p in snr]
        if any(b < a for a, b in zip(gaps, gaps[1:])):
            failures.append(f"(c) {kind}: gap not non-decreasing in SNR {np.round(gaps, 5).tolist()}")
    detail = f"kinds {', '.join(kinds)} at r0={r0:g} m: {len(failures)} failures"
    if failures:
        detail += f" (first: {failures[0]})"
    return not failures, detail


def check_trends(kinds=("fixed", "uniform", "poisson"), r0=TREND_R0_M):
    """Directional trends of the cached fractions and the fractional-caching gain."""
    return _timed("qualitative_trends", _trends, kinds, r0)


def run_all(quick=False, seed=None):
    """Run every check; ``quick`` shrinks sample sizes for an interactive run."""
    offset = 0 if seed is None else int(seed)
    if quick:
        return [
            check_oracle_optimality(F_values=(1, 2), grid_step=1e-2, seed=2024 + offset),
            check_analytic_vs_simulation(n_trials=200_000, seed=7 + offset),
            check_derivative_identities(n_points=20, seed=11 + offset),
            check_gamma_closed_form(n_l=15),
            check_water_level(snr_values=(25.0,)),
            check_trends(kinds=("fixed",)),
        ]
    return [
        check_oracle_optimality(seed=2024 + offset),
        check_analytic_vs_simulation(seed=7 + offset),
        check_derivative_identities(seed=11 + offset),
        check_gamma_closed_form(),
        check_water_level(),
        check_trends(),
    ]
