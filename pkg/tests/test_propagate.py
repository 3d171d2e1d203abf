import numpy as np
import pytest
from scipy.linalg import expm

from laserband import ModelParams, liouvillian_for
from laserband.errors import ExpmTolFailure
from laserband.propagate import (BandPropagator, DyadicPropagator,
                                 SymmetrizedTridiagPropagator)


def block_and_prop(family, k, dim=60, **kw):
    liou = liouvillian_for(ModelParams(family=family, p=4.1479, dim=dim, **kw))
    block = liou.block(k)
    return block, BandPropagator.for_block(block)


def test_markovian_bands_take_symmetrized_path():
    for fam, kw in (("p", {}), ("plambda", {"lam": 0.5})):
        _, prop = block_and_prop(fam, 1, **kw)
        assert isinstance(prop, SymmetrizedTridiagPropagator)


def test_pq_bands_take_dyadic_path():
    _, prop = block_and_prop("pq", 1, q=-1.0)
    assert isinstance(prop, DyadicPropagator)


@pytest.mark.parametrize("family,k,kw", [
    ("p", 0, {}), ("p", 1, {}), ("plambda", 2, {"lam": 0.5}),
    ("pq", 0, {"q": -1.0}), ("pq", 1, {"q": -1.0}), ("pq", 2, {"q": -0.4}),
])
def test_action_matches_direct_expm(family, k, kw):
    block, prop = block_and_prop(family, k, dim=60, **kw)
    m = block.to_dense()
    rng = np.random.default_rng(11)
    v = rng.normal(size=block.n)
    for t in (0.0, 0.7, 13.0, 450.0, 2.1e5):
        ref = expm(m * t) @ v
        got = prop.act(v, t)
        assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(v)


def test_act_many_matches_act():
    block, prop = block_and_prop("pq", 1, q=-0.8)
    v = np.linspace(0.1, 1.0, block.n)
    times = np.array([0.0, 1.0, 31.4])
    many = prop.act_many(v, times)
    for i, t in enumerate(times):
        np.testing.assert_allclose(many[i], prop.act(v, t), rtol=0, atol=1e-13)


@pytest.mark.parametrize("family,kw", [("p", {}), ("pq", {"q": -1.0})])
def test_semigroup_step_doubling(family, kw):
    # exp(tM) v == exp(t/2 M) exp(t/2 M) v within the error contract
    block, prop = block_and_prop(family, 1, **kw)
    v = np.ones(block.n)
    for t in (3.0, 777.0):
        whole = prop.act(v, t)
        halves = prop.act(prop.act(v, t / 2), t / 2)
        assert np.linalg.norm(whole - halves) <= 1e-10 * np.linalg.norm(v)


def test_negative_time_rejected_on_dyadic_path():
    _, prop = block_and_prop("pq", 1, q=-1.0)
    with pytest.raises(ExpmTolFailure):
        prop.act(np.ones(prop.n), -1.0)
