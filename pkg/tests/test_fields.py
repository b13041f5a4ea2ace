import numpy as np
import pytest

from ymhk import algebra as alg
from ymhk.algebra import SU2, U1
from ymhk.checks import adjoint_residual, random_links, random_tensor
from ymhk.errors import CurvatureTooRoughError, LatticeTooSmallError
from ymhk.fields import (
    ALGEBRA, HIGGS, GaugeField, HiggsField, bochner_laplacian, cov_diff, cov_diff_adjoint, curvature,
    gauge_act_links, gauge_act_tensor, iterated_deriv, iterated_laplacian, kato_violations, plaquette,
    zeros_tensor,
)
from ymhk.lattice import LatticeShape
from ymhk.samples import uniform_flux_links


def test_flat_links_have_zero_curvature(group):
    lat = LatticeShape(3, (4, 4, 5), 0.7)
    F = curvature(GaugeField.cold(lat, group))
    assert F.rank == 2 and F.form_degree == 2
    assert np.all(F.data == 0)


@pytest.mark.parametrize("L,h,m", [(6, 1.0, 1), (8, 0.5, 2), (5, 2.0, -1)])
def test_uniform_flux_curvature(L, h, m):
    F = curvature(uniform_flux_links(L, h, m))
    want = 2 * np.pi * m / (L * L * h * h)
    np.testing.assert_allclose(F.data[..., 0, 1, 0, 0], 1j * want, rtol=1e-12)
    np.testing.assert_allclose(F.data[..., 1, 0, 0, 0], -1j * want, rtol=1e-12)


def test_curvature_is_antisymmetric(group, rng):
    lat = LatticeShape(3, (4, 4, 4), 1.0)
    U = GaugeField(lat, group, alg.exp_map(alg.random_algebra(rng, lat.extents + (3,), group, 0.3)))
    d = curvature(U).data
    np.testing.assert_allclose(d, -np.swapaxes(d, 3, 4), atol=1e-12)
    np.testing.assert_array_equal(d[..., [0, 1, 2], [0, 1, 2], :, :], 0)


def test_curvature_is_gauge_covariant(group, rng):
    lat = LatticeShape(2, (6, 6), 1.0)
    U = GaugeField(lat, group, alg.exp_map(alg.random_algebra(rng, lat.extents + (2,), group, 0.4)))
    g = alg.random_group(rng, lat.extents, group)
    F = curvature(U)
    Fg = curvature(U.with_links(gauge_act_links(g, U.links)))
    np.testing.assert_allclose(Fg.data, gauge_act_tensor(g, F).data, atol=1e-12)
    np.testing.assert_allclose(Fg.pointwise_norm_sq(), F.pointwise_norm_sq(), rtol=1e-12)


def test_rough_plaquette_reports_site():
    lat = LatticeShape(2, (4, 4), 1.0)
    links = np.ones((4, 4, 2, 1, 1), complex)
    links[1, 2, 0] = -1
    with pytest.raises(CurvatureTooRoughError) as info:
        curvature(GaugeField(lat, U1, links))
    assert info.value.site in (lat.site_id((1, 2)), lat.site_id((1, 1)))


def test_plaquette_orientation():
    U = uniform_flux_links(4, 1.0, 1)
    p = plaquette(U, 0, 1)
    np.testing.assert_allclose(p[..., 0, 0], np.exp(2j * np.pi / 16), atol=1e-14)


def test_cov_diff_of_constant_with_flat_links_vanishes(group):
    lat = LatticeShape(2, (5, 4), 1.0)
    U = GaugeField.cold(lat, group)
    phi = zeros_tensor(lat, group, HIGGS, 0).with_data(np.full(lat.extents + (group.r,), 1.5 + 2j))
    assert np.all(cov_diff(U, phi).data == 0)
    assert np.all(bochner_laplacian(U, phi).data == 0)


def test_plane_wave_forward_difference():
    L, h = 8, 0.25
    lat = LatticeShape(1, (L,), h)
    x = np.arange(L) * h
    u = HiggsField(lat, U1, np.exp(2j * np.pi * x / (L * h))[:, None])
    U = GaugeField.cold(lat, U1)
    d = cov_diff(U, u.as_tensor())
    theta = 2 * np.pi * h / (L * h)
    np.testing.assert_allclose(np.abs(d.data[:, 0, 0]), abs(np.exp(1j * theta) - 1) / h, rtol=1e-13)
    for m in range(4):
        dm = iterated_deriv(U, u.as_tensor(), m)
        assert dm.rank == m
        assert dm.norm() == pytest.approx((abs(np.exp(1j * theta) - 1) / h) ** m * u.l2(), rel=1e-12)


def test_iterated_deriv_zero_is_identity(rng):
    lat = LatticeShape(2, (4, 4), 1.0)
    U = random_links(rng, lat, SU2)
    phi = random_tensor(rng, lat, SU2, ALGEBRA, 1)
    assert iterated_deriv(U, phi, 0) is phi


def test_iterated_deriv_guard():
    lat = LatticeShape(1, (4,), 1.0)
    U = GaugeField.cold(lat, U1)
    with pytest.raises(LatticeTooSmallError):
        iterated_deriv(U, HiggsField.zeros(lat, U1).as_tensor(), 4)


@pytest.mark.parametrize("extents", [(6, 6), (4, 4, 4, 4), (5,), (4, 5, 6)])
@pytest.mark.parametrize("kind,rank", [(HIGGS, 0), (HIGGS, 2), (ALGEBRA, 0), (ALGEBRA, 1)])
def test_adjoint_identity(group, rng, extents, kind, rank):
    lat = LatticeShape(len(extents), extents, 0.7)
    assert adjoint_residual(rng, lat, group, kind, rank) < 1e-12


def test_adjoint_of_zero_is_zero(group, rng):
    lat = LatticeShape(2, (4, 4), 1.0)
    U = random_links(rng, lat, group)
    psi = zeros_tensor(lat, group, ALGEBRA, 2)
    assert np.all(cov_diff_adjoint(U, psi).data == 0)


def test_cov_diff_is_gauge_equivariant(group, rng):
    lat = LatticeShape(2, (5, 6), 1.0)
    U = random_links(rng, lat, group)
    g = alg.random_group(rng, lat.extents, group)
    Ug = U.with_links(gauge_act_links(g, U.links))
    for kind in (HIGGS, ALGEBRA):
        phi = random_tensor(rng, lat, group, kind, 1)
        lhs = cov_diff(Ug, gauge_act_tensor(g, phi))
        rhs = gauge_act_tensor(g, cov_diff(U, phi))
        np.testing.assert_allclose(lhs.data, rhs.data, atol=1e-12)


def test_iterated_laplacian_is_self_adjoint_and_negative(group, rng):
    lat = LatticeShape(2, (6, 6), 1.0)
    U = random_links(rng, lat, group)
    a = random_tensor(rng, lat, group, HIGGS, 0)
    b = random_tensor(rng, lat, group, HIGGS, 0)
    lap_a = iterated_laplacian(U, a, 1)
    assert lap_a.inner(b) == pytest.approx(a.inner(iterated_laplacian(U, b, 1)), rel=1e-12)
    assert lap_a.inner(a) < 0


def test_kato_inequality_holds_on_random_fields(group, rng):
    lat = LatticeShape(3, (4, 5, 4), 0.5)
    U = random_links(rng, lat, group)
    for scale in (1e-8, 1.0, 1e6):
        u = HiggsField(lat, group, scale * random_tensor(rng, lat, group, HIGGS, 0).data)
        assert kato_violations(U, u) == 0


def test_kato_counts_broken_transport():
    lat = LatticeShape(1, (4,), 1.0)
    U = GaugeField(lat, U1, np.full((4, 1, 1, 1), 0.5 + 0j))  # not unitary
    u = HiggsField(lat, U1, np.array([[1], [2], [1], [2]], complex))
    # from an even site: | |u(x+1)| - |u(x)| | = 1 > |0.5 * 2 - 1| = 0
    assert kato_violations(U, u) == 2


def test_tensor_norm_counts_each_plane_once():
    U = uniform_flux_links(6, 1.0, 1)
    F = curvature(U)
    f = 2 * np.pi / 36
    np.testing.assert_allclose(F.pointwise_norm_sq(), f * f, rtol=1e-12)
    assert F.norm_sq() == pytest.approx(36 * f * f, rel=1e-12)
