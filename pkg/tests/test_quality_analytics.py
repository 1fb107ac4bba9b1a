import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccache.channel_model import ChannelParams, threshold_k
from fraccache.content_model import CacheConstraintError, ContentLibrary
from fraccache.distance import Fixed, PoissonDisk, TabulatedPdf, UniformDisk
from fraccache.policy_optimizer import CachingPolicy
from fraccache.quality_analytics import (
    IncrementCurve,
    eval_g,
    expected_delivered_quality,
    expected_transcoded_quality,
    increment_rate_fixed,
    increment_rate_radial,
    lower_incomplete_gamma,
    marginal_gain,
    objective,
    radial_outage_integral,
    success_probability,
)

mpmath.mp.dps = 30


def _mp_delivered_fixed(alpha, r, lib, params):
    # independent high-precision evaluation of E[min(C T / A, q_max (1 - alpha))]
    k = threshold_k(alpha, r, lib, params)
    gain = mpmath.mpf(params.snr_scale) / (mpmath.mpf(r) / params.r0) ** params.beta
    rs = mpmath.mpf(params.rate_scale(lib))
    body = mpmath.quad(lambda u: rs * mpmath.log(1 + gain * u) / mpmath.log(2) * mpmath.exp(-u), [0, 1, 5, 20, k])
    return float(body + lib.q_max * (1 - alpha) * mpmath.exp(-k))


@pytest.fixture
def lib():
    return ContentLibrary.zipf(20, 1.0)


@pytest.fixture
def params():
    return ChannelParams.from_db(r0_m=1.75)


def test_lower_incomplete_gamma_limits():
    assert lower_incomplete_gamma(1.0, 0.0) == 0.0
    assert lower_incomplete_gamma(2 / 3, 1e4) == pytest.approx(math.gamma(2 / 3), rel=1e-14)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        lower_incomplete_gamma(1.0, -1.0)


@pytest.mark.parametrize("beta", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("l", [1e-6, 1e-4, 1e-2, 1.0, 10.0])
def test_radial_closed_form_against_mpmath(beta, l):
    R = 60.0
    expected = mpmath.quad(lambda r: mpmath.exp(-l * r**beta) * 2 * r / R**2, [0, l ** (-1 / beta), R])
    got = radial_outage_integral(l, UniformDisk(R), beta, method="closed")
    assert got == pytest.approx(float(expected), abs=1e-12)


def test_radial_outage_edge_cases():
    assert radial_outage_integral(0.0, UniformDisk(60), 3.0) == 1.0
    assert radial_outage_integral(0.01, Fixed(10.0), 3.0) == pytest.approx(math.exp(-10.0))
    with pytest.raises(ValueError):
        radial_outage_integral(-1.0, UniformDisk(60), 3.0)
    with pytest.raises(ValueError):
        radial_outage_integral(1.0, TabulatedPdf([0, 10], [1, 1]), 3.0, method="closed")


def test_poisson_and_uniform_share_outage(lib, params):
    for a in (0.0, 0.3, 0.9):
        assert success_probability(a, PoissonDisk(1e-3, 60), lib, params) == success_probability(
            a, UniformDisk(60), lib, params
        )


def test_tabulated_uniform_density_matches_closed_form():
    grid = np.linspace(0, 60, 7)
    tab = TabulatedPdf(grid, 2 * grid / 3600)
    for l in (1e-5, 1e-3, 0.1):
        assert radial_outage_integral(l, tab, 3.0) == pytest.approx(
            radial_outage_integral(l, UniformDisk(60), 3.0), abs=1e-10
        )


@pytest.mark.parametrize("alpha", [0.0, 0.2, 0.5, 0.8, 0.99])
@pytest.mark.parametrize("r", [10.0, 40.0, 80.0])
def test_fixed_delivered_quality_against_mpmath(lib, params, alpha, r):
    assert expected_delivered_quality(alpha, Fixed(r), lib, params) == pytest.approx(
        _mp_delivered_fixed(alpha, r, lib, params), rel=1e-9, abs=1e-12
    )


@pytest.mark.parametrize("law", [Fixed(40.0), UniformDisk(60.0), TabulatedPdf([5, 20, 70], [0, 2, 1])])
@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.6, 0.95])
def test_nested_and_marginal_forms_agree(lib, params, law, alpha):
    nested = expected_delivered_quality(alpha, law, lib, params, method="nested")
    marginal = expected_delivered_quality(alpha, law, lib, params, method="marginal")
    assert nested == pytest.approx(marginal, rel=1e-8, abs=1e-10)


def test_delivered_quality_at_full_cache_is_zero(lib, params):
    assert expected_delivered_quality(1.0, UniformDisk(60), lib, params) == 0.0
    with pytest.raises(ValueError):
        expected_transcoded_quality(1.0, UniformDisk(60), lib, params)
    with pytest.raises(ValueError):
        expected_delivered_quality(0.5, Fixed(40), lib, params, method="simpson")


@pytest.mark.parametrize("law", [Fixed(40.0), UniformDisk(60.0)])
def test_transcoded_form_equals_g_form(lib, params, law):
    alpha = np.array([1.0, 0.7, 0.3] + [0.0] * 17)
    policy = (alpha, np.ones(20))
    # only valid when the policy fits
    lib_big = lib.replace(M=2.5)
    assert objective(policy, law, lib_big, params, form="transcoded") == pytest.approx(
        objective(policy, law, lib_big, params), rel=1e-9
    )


def test_g_bounds(lib, params):
    for a in np.linspace(0, 1, 11):
        g = eval_g(a, 1.0, UniformDisk(60), lib, params)
        assert a - 1e-12 <= g <= 1.0 + 1e-12


def test_eval_g_rejects_quality_outside_range(lib, params):
    with pytest.raises(ValueError):
        eval_g(0.5, 0.1, Fixed(40), lib, params)
    # the quality of an uncached content is irrelevant
    assert eval_g(0.0, 0.1, Fixed(40), lib, params) == eval_g(0.0, 1.0, Fixed(40), lib, params)


def test_objective_rejects_infeasible_policy(lib, params):
    with pytest.raises(CacheConstraintError):
        objective((np.ones(20), np.ones(20)), Fixed(40), lib, params)
    with pytest.raises(ValueError):
        objective((np.ones(3), np.ones(3)), Fixed(40), lib, params)


def test_objective_accepts_policy_objects(lib, params):
    alpha = np.zeros(20)
    alpha[:5] = 1.0
    p = CachingPolicy(alpha, np.ones(20), alpha.copy(), math.nan, 5.0)
    expected = math.fsum(
        float(f) * (1.0 if a else expected_delivered_quality(0.0, Fixed(40), lib, params))
        for f, a in zip(lib.popularity, alpha)
    )
    assert objective(p, Fixed(40), lib, params) == pytest.approx(expected, rel=1e-14)


@given(st.floats(0, 0.999), st.floats(5, 100))
@settings(max_examples=40, deadline=None)
def test_fixed_derivative_is_success_probability(alpha, r):
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db(r0_m=1.75)
    h = 1e-6
    lo, hi = max(alpha - h, 0.0), min(alpha + h, 1.0)
    d = Fixed(r)
    num = (expected_delivered_quality(hi, d, lib, params) - expected_delivered_quality(lo, d, lib, params)) / (hi - lo)
    expected = -lib.q_max * math.exp(-threshold_k(alpha, r, lib, params))
    assert num == pytest.approx(expected, rel=1e-4, abs=1e-7)


def test_marginal_gain_monotone(lib, params):
    x = np.linspace(0, 1, 101)
    for law in (Fixed(40), UniformDisk(60)):
        v = np.array([marginal_gain(xi, law, lib, params) for xi in x])
        assert np.all(np.diff(v) <= 1e-15)
        assert v[-1] == pytest.approx(0.0, abs=1e-15)
        assert 0 < v[0] <= 1


def test_increment_rates_scale_with_popularity(lib, params):
    for i in (0, 5, 19):
        f = lib.popularity[i]
        assert increment_rate_fixed(0.3, i, 40.0, lib, params) == pytest.approx(
            f * marginal_gain(0.3, Fixed(40), lib, params), rel=1e-15
        )
        assert increment_rate_radial(0.3, i, UniformDisk(60), lib, params) == pytest.approx(
            f * marginal_gain(0.3, UniformDisk(60), lib, params), rel=1e-15
        )
    curve = IncrementCurve(2, UniformDisk(60), lib, params)
    assert curve.v0 == pytest.approx(increment_rate_radial(0.0, 2, UniformDisk(60), lib, params))
    with pytest.raises(ValueError):
        marginal_gain(1.5, Fixed(40), lib, params)
