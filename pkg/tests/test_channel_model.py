import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraccache.channel_model import (
    BITS_PER_MBIT,
    ChannelParams,
    capacity,
    db_to_linear,
    deliverable_quality,
    sample_channel_power,
    threshold_k,
    threshold_l,
)
from fraccache.content_model import ContentLibrary

# mpmath (40 digits) values for the default operating point
CAPACITY_ROUNDED_INPUTS = 31331573.568783985  # psi = 316.23, upsilon = 3.1623
L_AT_ZERO = 0.0019572090360812610
K_AT_ZERO_40M = 125.26137830920070


def test_db_conversion():
    assert db_to_linear(25) == pytest.approx(316.22776601683796, rel=1e-15)
    assert db_to_linear(0) == 1.0


def test_channel_from_db_converts_units(default_params):
    assert default_params.psi == pytest.approx(10**2.5)
    assert default_params.upsilon == pytest.approx(10**0.5)
    assert default_params.B == 5e6
    assert default_params.r0 == 1.0


@pytest.mark.parametrize("field", ["psi", "B", "beta", "r0"])
def test_channel_rejects_non_positive(field):
    kwargs = dict(psi=1.0, upsilon=1.0, B=1.0, beta=3.0, r0=1.0)
    kwargs[field] = 0.0
    with pytest.raises(ValueError):
        ChannelParams(**kwargs)
    with pytest.raises(ValueError):
        ChannelParams(psi=1.0, upsilon=-1.0, B=1.0)


def test_capacity_zero_power(default_params):
    assert capacity(0.0, 40.0, default_params) == 0.0


def test_capacity_reference_value():
    params = ChannelParams(psi=316.23, upsilon=3.1623, B=5e6)
    assert capacity(1.0, 1.0, params) == pytest.approx(CAPACITY_ROUNDED_INPUTS, rel=1e-12)


def test_capacity_rejects_non_positive_distance(default_params):
    with pytest.raises(ValueError):
        capacity(1.0, 0.0, default_params)


@given(
    st.floats(0, 50), st.floats(1, 100), st.floats(0, 40), st.floats(0, 10),
    st.floats(1.5, 5), st.floats(0.01, 2),
)
def test_capacity_monotone(u, r, psi_db, ups_db, beta, du):
    params = ChannelParams.from_db(psi_db, ups_db, 5.0, beta)
    assert capacity(u + du, r, params) > capacity(u, r, params)
    if u > 1e-6:
        assert capacity(u, r * 1.5, params) < capacity(u, r, params)


@given(st.floats(1e-3, 20), st.floats(1, 100), st.floats(0.1, 10), st.floats(0.2, 5))
def test_capacity_invariant_to_common_distance_scaling(u, r, r0, c):
    a = ChannelParams.from_db(r0_m=r0)
    b = ChannelParams.from_db(r0_m=c * r0)
    assert capacity(u, c * r, b) == pytest.approx(capacity(u, r, a), rel=1e-12)


def test_thresholds_at_default_point(default_lib, default_params):
    assert threshold_l(0.0, default_lib, default_params) == pytest.approx(L_AT_ZERO, rel=1e-12)
    assert threshold_k(0.0, 40.0, default_lib, default_params) == pytest.approx(K_AT_ZERO_40M, rel=1e-12)
    assert threshold_k(1.0, 40.0, default_lib, default_params) == 0.0
    assert threshold_l(1.0, default_lib, default_params) == 0.0


@given(st.floats(0, 1), st.floats(1, 100))
def test_threshold_defining_identity(alpha, r):
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db()
    k = threshold_k(alpha, r, lib, params)
    delivered = capacity(k, r, params) * lib.T / (lib.A * BITS_PER_MBIT)
    target = lib.q_max * (1 - alpha)
    assert delivered == pytest.approx(target, rel=1e-9, abs=1e-15)
    assert deliverable_quality(k, r, lib, params) == pytest.approx(target, rel=1e-9, abs=1e-15)


@given(st.floats(0, 1), st.floats(1, 100), st.floats(0.5, 5))
def test_l_scales_to_k(alpha, r, r0):
    lib = ContentLibrary.zipf(5, 1.0)
    params = ChannelParams.from_db(r0_m=r0)
    assert threshold_l(alpha, lib, params) * (r / r0) ** 3 == pytest.approx(
        threshold_k(alpha, r, lib, params), rel=1e-12
    )


def test_thresholds_decreasing_and_convex(default_lib, default_params):
    alpha = np.linspace(0, 1, 401)
    k = threshold_k(alpha, 40.0, default_lib, default_params)
    assert np.all(np.diff(k) < 0)
    assert np.all(k >= 0)
    assert np.all(np.diff(k, 2) >= -1e-12 * k.max())


def test_thresholds_reject_alpha_outside_unit_interval(default_lib, default_params):
    for bad in (-0.01, 1.01, math.nan):
        with pytest.raises(ValueError):
            threshold_l(bad, default_lib, default_params)


def test_channel_power_is_unit_exponential():
    u = sample_channel_power(np.random.default_rng(3), 10**6)
    n = u.size
    assert np.all(u >= 0)
    assert abs(u.mean() - 1.0) <= 3 / math.sqrt(n)
    # var(u) = 1, var(u**2) = 20, var((u - 1)**2) = 8
    assert abs(u.var() - 1.0) <= 3 * math.sqrt(8 / n)
    frac = np.mean(u <= math.log(2))
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / n)
