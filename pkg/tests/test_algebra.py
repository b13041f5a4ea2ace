import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ymhk import algebra as alg
from ymhk.algebra import SU2, U1
from ymhk.errors import BranchError


def test_exp_of_zero_is_identity(group):
    np.testing.assert_array_equal(alg.exp_map(np.zeros((3, group.r, group.r), complex)),
                                  alg.identity((3,), group.r))


def test_u1_exp_quarter_turn():
    z = alg.exp_map(np.array([[1j * np.pi / 2]]))
    assert z[0, 0] == pytest.approx(1j, abs=1e-15)


def test_su2_exp_diagonal_generator():
    x = np.pi / 3 * np.diag([1j, -1j])
    want = np.diag([np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 3)])
    np.testing.assert_allclose(alg.exp_map(x), want, atol=1e-15)


def test_su2_exp_matches_series(rng):
    x = alg.random_algebra(rng, (20,), SU2, 0.8)
    ref = np.eye(2, dtype=complex)[None].repeat(20, 0)
    term = ref.copy()
    for j in range(1, 40):
        term = term @ x / j
        ref = ref + term
    np.testing.assert_allclose(alg.exp_map(x), ref, atol=1e-13)


def test_log_of_identity_is_zero(group):
    np.testing.assert_array_equal(alg.log_map(alg.identity((2,), group.r)), 0)


def test_log_of_minus_one_is_a_branch_error():
    with pytest.raises(BranchError):
        alg.log_map(np.array([[[-1.0 + 0j]]]))
    with pytest.raises(BranchError):
        alg.log_map(-np.eye(2, dtype=complex)[None])


def test_branch_error_reports_flat_index():
    u = np.ones((5, 1, 1), complex)
    u[3] = -1
    with pytest.raises(BranchError) as info:
        alg.log_map(u)
    assert info.value.args[1] == 3


@settings(max_examples=60)
@given(st.lists(st.floats(-1.7, 1.7), min_size=3, max_size=3))
def test_su2_log_exp_round_trip(coeffs):
    a = np.array(coeffs)
    if np.linalg.norm(a) >= alg.THETA_MAX:
        return
    x = alg.from_coeffs(a)
    np.testing.assert_allclose(alg.log_map(alg.exp_map(x)), x, atol=1e-12)


@given(st.floats(-alg.THETA_MAX, alg.THETA_MAX))
def test_u1_log_exp_round_trip(a):
    x = alg.from_coeffs(np.array([a]))
    np.testing.assert_allclose(alg.log_map(alg.exp_map(x)), x, atol=1e-12)


def test_exp_log_round_trip_on_random_elements(group, rng):
    u = alg.random_group(rng, (200,), group)
    keep = alg.rotation_angle(u) < alg.THETA_MAX
    u = u[keep]
    np.testing.assert_allclose(alg.exp_map(alg.log_map(u)), u, atol=1e-12)


def test_inner_u1_scalar():
    assert alg.inner(np.array([[2j]]), np.array([[3j]])) == pytest.approx(6.0)


def test_inner_is_positive_definite(group, rng):
    x = alg.random_algebra(rng, (50,), group)
    assert np.all(alg.inner(x, x) > 0)
    assert alg.inner(np.zeros((group.r, group.r), complex), np.zeros((group.r, group.r), complex)) == 0
    y = alg.random_algebra(rng, (50,), group)
    np.testing.assert_allclose(alg.inner(x, y), alg.inner(y, x))
    np.testing.assert_allclose(alg.inner(x, y), -np.real(np.trace(x @ y, axis1=-2, axis2=-1)))


def test_ad_invariance(group, rng):
    g = alg.random_group(rng, (50,), group)
    x = alg.random_algebra(rng, (50,), group)
    y = alg.random_algebra(rng, (50,), group)
    lhs = alg.inner(alg.adjoint_action(g, x), alg.adjoint_action(g, y))
    np.testing.assert_allclose(lhs, alg.inner(x, y), rtol=1e-12, atol=1e-12)


def test_commutator_and_adjoint_stay_in_algebra(rng):
    x = alg.random_algebra(rng, (50,), SU2)
    y = alg.random_algebra(rng, (50,), SU2)
    g = alg.random_group(rng, (50,), SU2)
    for z in (alg.commutator(x, y), alg.adjoint_action(g, x)):
        np.testing.assert_allclose(alg.dag(z), -z, atol=1e-13)
        np.testing.assert_allclose(np.trace(z, axis1=-2, axis2=-1), 0, atol=1e-13)


def test_coeff_chart_round_trip(group, rng):
    a = rng.standard_normal((10, group.dim))
    np.testing.assert_allclose(alg.to_coeffs(alg.from_coeffs(a)), a, atol=1e-15)


def test_rotation_angle_matches_chart_norm(rng):
    a = rng.uniform(-1, 1, (30, 3))
    u = alg.exp_map(alg.from_coeffs(a))
    np.testing.assert_allclose(alg.rotation_angle(u), np.linalg.norm(a, axis=-1), atol=1e-12)


def test_random_group_elements_are_unitary(group, rng):
    assert alg.unitarity_defect(alg.random_group(rng, (100,), group)) < 1e-14


def test_ball_noise_respects_radius(group, rng):
    x = alg.random_ball_algebra(rng, (500,), group, 0.4)
    assert np.all(np.linalg.norm(alg.to_coeffs(x), axis=-1) <= 0.4 + 1e-15)


def test_reunitarize_fixes_drift(group, rng):
    u = alg.random_group(rng, (40,), group)
    drift = u + 1e-6 * (rng.standard_normal(u.shape) + 1j * rng.standard_normal(u.shape))
    fixed = alg.reunitarize(drift)
    assert alg.unitarity_defect(fixed) < 1e-14
    assert np.max(np.abs(fixed - u)) < 1e-5
    np.testing.assert_allclose(alg.reunitarize(u), u, atol=1e-14)


def test_project_is_orthogonal(group, rng):
    m = rng.standard_normal((20, group.r, group.r)) + 1j * rng.standard_normal((20, group.r, group.r))
    p = alg.project(m)
    np.testing.assert_allclose(alg.project(p), p, atol=1e-15)
    x = alg.random_algebra(rng, (20,), group)
    np.testing.assert_allclose(alg.inner(x, m - p), 0, atol=1e-13)


def test_mm_matches_matmul(rng):
    a = rng.standard_normal((7, 2, 2)) + 1j * rng.standard_normal((7, 2, 2))
    b = rng.standard_normal((7, 2, 2)) + 1j * rng.standard_normal((7, 2, 2))
    np.testing.assert_allclose(alg.mm(a, b), a @ b, atol=1e-14)
    v = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
    np.testing.assert_allclose(alg.mv(a, v), (a @ v[..., None])[..., 0], atol=1e-14)


@pytest.mark.parametrize("scale", [1e-6, 0.3, 2.5])
def test_dlog_transpose_matches_finite_differences(rng, scale):
    """``inner(a, d/ds log(exp(sY) P)) == inner(dlog_transpose(L, a), Y)``."""
    lp = alg.from_coeffs(rng.standard_normal((10, 3)))
    lp = lp * (scale / np.sqrt(alg.norm_sq(lp) / 2))[:, None, None]
    p = alg.exp_map(lp)
    a = alg.random_algebra(rng, (10,), SU2)
    y = alg.random_algebra(rng, (10,), SU2)
    eps = 1e-6
    num = (alg.log_map(alg.mm(alg.exp_map(eps * y), p)) - alg.log_map(alg.mm(alg.exp_map(-eps * y), p))) / (2 * eps)
    np.testing.assert_allclose(alg.inner(a, num), alg.inner(alg.dlog_transpose(lp, a), y), atol=1e-8)
