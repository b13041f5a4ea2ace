import numpy as np
import pytest

from ymhk import algebra as alg
from ymhk.checks import random_direction
from ymhk.energy import FlowParams
from ymhk.fields import GaugeField, HiggsField, gauge_act_links, iterated_deriv
from ymhk.flow import hot_start
from ymhk.gradient import fd_check, gradient
from ymhk.lattice import LatticeShape


@pytest.mark.parametrize("extents,h", [((6, 6), 1.0), ((4, 5, 4), 0.6), ((4, 4, 4, 4), 1.3)])
@pytest.mark.parametrize("k,lam", [(0, 0.0), (1, 1.0), (2, 0.0)])
def test_gradient_matches_finite_differences(group, rng, extents, h, k, lam):
    lat = LatticeShape(len(extents), extents, h)
    s = hot_start(lat, group, FlowParams(k, lam), 0.4, 5)
    g = gradient(s.U, s.u, s.params)
    for _ in range(4):
        r = fd_check(s.U, s.u, s.params, random_direction(rng, lat, group), 1e-5, g)
        assert r.rel_err < 1e-6


def test_flat_zero_state_has_zero_gradient(group):
    lat = LatticeShape(2, (5, 5), 1.0)
    g = gradient(GaugeField.cold(lat, group), HiggsField.zeros(lat, group), FlowParams(2, 0.0))
    assert np.all(g.link_grad == 0) and np.all(g.higgs_grad == 0)


def test_zero_direction(group):
    lat = LatticeShape(2, (5, 5), 1.0)
    s = hot_start(lat, group, FlowParams(1, 0.0), 0.3, 1)
    d = (np.zeros_like(s.U.links), np.zeros_like(s.u.values))
    r = fd_check(s.U, s.u, s.params, d, 1e-5)
    assert r.analytic == 0 and r.numeric == 0 and r.rel_err == 0


def test_pure_higgs_direction_on_flat_links_is_exact(group, rng):
    lat = LatticeShape(2, (6, 6), 1.0)
    U = GaugeField.cold(lat, group)
    u = HiggsField(lat, group, rng.standard_normal(lat.extents + (group.r,)) + 0j)
    d = (np.zeros_like(U.links), rng.standard_normal(u.values.shape) + 1j * rng.standard_normal(u.values.shape))
    r = fd_check(U, u, FlowParams(1, 0.0), d, 1e-3)
    assert r.rel_err < 1e-10


def test_fd_check_rejects_bad_eps(group):
    lat = LatticeShape(2, (5, 5), 1.0)
    s = hot_start(lat, group, FlowParams(1, 0.0), 0.3, 1)
    with pytest.raises(ValueError):
        fd_check(s.U, s.u, s.params, (s.U.links, s.u.values), 0.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_higgs_pairing_identity(group, k):
    lat = LatticeShape(2, (6, 6), 0.7)
    s = hot_start(lat, group, FlowParams(k, 0.0), 0.5, 8)
    g = gradient(s.U, s.u, s.params)
    pairing = lat.site_volume * np.sum(np.real(np.conj(s.u.values) * g.higgs_grad))
    want = iterated_deriv(s.U, s.u.as_tensor(), k + 1).norm_sq()
    assert pairing == pytest.approx(want, rel=1e-12)
    assert pairing == pytest.approx(2 * s.energy().higgs_term, rel=1e-12)


def test_link_gradient_is_in_the_algebra(group):
    lat = LatticeShape(2, (6, 6), 1.0)
    s = hot_start(lat, group, FlowParams(1, 1.0), 0.5, 2)
    z = gradient(s.U, s.u, s.params).link_grad
    np.testing.assert_allclose(alg.project(z), z, atol=1e-15)


def test_gradient_is_gauge_equivariant(group, rng):
    lat = LatticeShape(2, (6, 6), 1.0)
    s = hot_start(lat, group, FlowParams(1, 1.0), 0.5, 4)
    g = alg.random_group(rng, lat.extents, group)
    Ug = s.U.with_links(gauge_act_links(g, s.U.links))
    ug = HiggsField(lat, group, alg.mv(g, s.u.values))
    a = gradient(s.U, s.u, s.params)
    b = gradient(Ug, ug, s.params)
    np.testing.assert_allclose(b.higgs_grad, alg.mv(g, a.higgs_grad), atol=1e-12)
    gl = g[..., None, :, :]
    np.testing.assert_allclose(b.link_grad, alg.adjoint_action(gl, a.link_grad), atol=1e-11)
