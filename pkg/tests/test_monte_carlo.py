import numpy as np
import pytest

from fraccache import kernels
from fraccache.channel_model import ChannelParams
from fraccache.content_model import CacheConstraintError, ContentLibrary
from fraccache.distance import Fixed, PoissonDisk, TabulatedPdf, UniformDisk
from fraccache.monte_carlo import SimEstimate, cross_evaluate, simulate_quality
from fraccache.policy_optimizer import CachingPolicy, baseline_whole_content, waterfill
from fraccache.quality_analytics import objective

BACKENDS = ["numpy"] + (["numba"] if kernels.NUMBA_ENABLED else [])


@pytest.fixture
def setup():
    lib = ContentLibrary.zipf(20, 1.0)
    params = ChannelParams.from_db(r0_m=1.75)
    return lib, params


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize(
    "law", [Fixed(40.0), UniformDisk(60.0), PoissonDisk(1e-3, 60.0), TabulatedPdf([5, 20, 70], [0, 2, 1])]
)
def test_simulation_agrees_with_analytic(setup, backend, law):
    lib, params = setup
    p = waterfill(lib, params, law)
    est = simulate_quality(p, law, lib, params, n_trials=200_000, seed=3, backend=backend)
    assert est.within(objective(p, law, lib, params), n_sigma=4.0)


def test_same_seed_reproduces_bitwise(setup):
    lib, params = setup
    p = waterfill(lib, params, Fixed(40))
    a = simulate_quality(p, Fixed(40), lib, params, 50_000, seed=11)
    b = simulate_quality(p, Fixed(40), lib, params, 50_000, seed=11)
    assert a == b
    c = simulate_quality(p, Fixed(40), lib, params, 50_000, seed=12)
    assert c.mean != a.mean


def test_chunking_does_not_change_samples(setup):
    lib, params = setup
    law = UniformDisk(60.0)
    p = waterfill(lib, params, law)
    a, sa = simulate_quality(p, law, lib, params, 30_000, seed=1, return_samples=True)
    b, sb = simulate_quality(p, law, lib, params, 30_000, seed=1, chunk=7_001, return_samples=True)
    np.testing.assert_array_equal(sa, sb)
    assert b.mean == pytest.approx(a.mean, rel=1e-14)
    assert b.std_error == pytest.approx(a.std_error, rel=1e-10)


def test_backends_agree_on_estimate(setup):
    if "numba" not in BACKENDS:
        pytest.skip("numba unavailable")
    lib, params = setup
    law = UniformDisk(60.0)
    p = waterfill(lib, params, law)
    a = simulate_quality(p, law, lib, params, 100_000, seed=2, backend="numpy")
    b = simulate_quality(p, law, lib, params, 100_000, seed=2, backend="numba")
    assert a.mean == pytest.approx(b.mean, rel=1e-12)


def test_fully_cached_policy_has_zero_variance():
    lib = ContentLibrary.zipf(3, 1.0, M=3.0)
    params = ChannelParams.from_db()
    p = CachingPolicy(np.ones(3), np.ones(3), np.ones(3), 0.0, 3.0)
    est = simulate_quality(p, Fixed(40), lib, params, 1000)
    assert est.mean == 1.0
    assert est.std_error == 0.0


def test_infeasible_policy_rejected(setup):
    lib, params = setup
    p = CachingPolicy(np.ones(20), np.ones(20), np.ones(20), 0.0, 20.0)
    with pytest.raises(CacheConstraintError):
        simulate_quality(p, Fixed(40), lib, params, 10)
    with pytest.raises(ValueError):
        simulate_quality(waterfill(lib, params, Fixed(40)), Fixed(40), lib, params, 0)


def test_cross_evaluation_uses_given_policy(setup):
    lib, params = setup
    base = baseline_whole_content(lib, params, Fixed(40))
    est = cross_evaluate(Fixed(40), UniformDisk(60), lib, params, 20_000, seed=5, policy=base)
    assert est == simulate_quality(base, UniformDisk(60), lib, params, 20_000, seed=5)
    wf = cross_evaluate(Fixed(40), UniformDisk(60), lib, params, 20_000, seed=5)
    assert isinstance(wf, SimEstimate)
    assert wf.to_dict()["n_trials"] == 20_000
