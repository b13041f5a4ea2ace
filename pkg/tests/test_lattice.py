import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymhk.errors import LatticeTooSmallError
from ymhk.lattice import LatticeShape, roll


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        LatticeShape(5, (4,) * 5, 1.0)
    with pytest.raises(ValueError):
        LatticeShape(2, (4, 3), 1.0)
    with pytest.raises(ValueError):
        LatticeShape(2, (4, 4), 0.0)
    with pytest.raises(ValueError):
        LatticeShape(2, (4, 4, 4), 1.0)


def test_measure():
    lat = LatticeShape(3, (4, 5, 6), 0.5)
    assert lat.num_sites == 120
    assert lat.site_volume == 0.125
    assert lat.volume == pytest.approx(15.0)


def test_shift_wraps_at_boundary():
    lat = LatticeShape(2, (4, 4), 1.0)
    assert lat.shift(lat.site_id((3, 0)), 0, +1) == lat.site_id((0, 0))
    assert lat.shift(lat.site_id((0, 2)), 1, -1) == lat.site_id((0, 1))


def test_axis_zero_runs_fastest():
    lat = LatticeShape(2, (4, 5), 1.0)
    assert lat.coords(1) == (1, 0)
    assert lat.coords(4) == (0, 1)


def test_shift_rejects_bad_axis():
    lat = LatticeShape(2, (4, 4), 1.0)
    with pytest.raises(ValueError):
        lat.shift(0, 2, 1)


extents_st = st.integers(1, 4).flatmap(lambda n: st.lists(st.integers(4, 7), min_size=n, max_size=n))


@given(extents_st, st.data())
def test_shift_inverse_and_period(extents, data):
    lat = LatticeShape(len(extents), tuple(extents), 1.0)
    s = data.draw(st.integers(0, lat.num_sites - 1))
    a = data.draw(st.integers(0, lat.n - 1))
    assert lat.shift(lat.shift(s, a, +1), a, -1) == s
    t = s
    for _ in range(lat.extents[a]):
        t = lat.shift(t, a, +1)
    assert t == s
    assert lat.site_id(lat.coords(s)) == s


@given(extents_st)
def test_shift_is_a_bijection(extents):
    lat = LatticeShape(len(extents), tuple(extents), 1.0)
    for a in range(lat.n):
        image = {lat.shift(s, a, +1) for s in range(lat.num_sites)}
        assert len(image) == lat.num_sites


def test_site_order_round_trip(rng):
    lat = LatticeShape(3, (4, 5, 6), 1.0)
    f = rng.standard_normal(lat.extents + (2, 3))
    flat = lat.to_site_order(f)
    assert flat.shape == (120, 2, 3)
    np.testing.assert_array_equal(flat[lat.site_id((1, 2, 3))], f[1, 2, 3])
    np.testing.assert_array_equal(lat.from_site_order(flat), f)


def test_roll_reads_neighbour():
    lat = LatticeShape(2, (4, 5), 1.0)
    f = np.arange(20.0).reshape(4, 5)
    ahead = roll(f, 1, +1)
    assert ahead[2, 4] == f[2, 0]
    assert roll(f, 0, -1)[0, 3] == f[3, 3]
    assert lat.extents == f.shape


def test_stencil_guard():
    lat = LatticeShape(2, (4, 4), 1.0)
    lat.require_order(3)
    with pytest.raises(LatticeTooSmallError):
        lat.require_order(4)
