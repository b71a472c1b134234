import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intmin.barrier import Polytope, approx_volumetric_center
from intmin.dimred import (AmbiguousHyperplane, SubspaceState, box_log_volume, clip_to_domain,
                           hyperplane_frame, hyperplane_offset, integral_levels, outer_scale,
                           reduce_dimension, restart_box, slice_ellipsoid)
from intmin.errors import EmptySlice
from intmin.lattice import LatticeState, same_lattice


def test_frame_is_orthonormal_complement():
    v = np.array([1.0, 2.0, -2.0])
    g = hyperplane_frame(v)
    assert g.shape == (3, 2)
    np.testing.assert_allclose(g.T @ g, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(v @ g, 0, atol=1e-14)


def test_slice_through_center():
    sl = slice_ellipsoid([0.0, 0.0], np.eye(2), [1.0, 0.0], 0.0)
    np.testing.assert_allclose(sl.center, [0, 0])
    assert sl.radius_sq == 1.0
    np.testing.assert_allclose(sl.shape, [[1.0]])
    np.testing.assert_allclose(np.abs(sl.frame), [[0], [1]], atol=1e-15)


def test_slice_off_center():
    sl = slice_ellipsoid([0.0, 0.0], np.eye(2), [1.0, 0.0], 0.6)
    np.testing.assert_allclose(sl.center, [0.6, 0])
    assert sl.radius_sq == pytest.approx(0.64)
    # residual radius 0.8
    assert 1 / math.sqrt(sl.shape[0, 0]) == pytest.approx(0.8)


def test_slice_misses():
    with pytest.raises(EmptySlice):
        slice_ellipsoid([0.0, 0.0], np.eye(2), [1.0, 0.0], 1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_slice_is_exact(d, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d))
    A = m @ m.T + 0.1 * np.eye(d)
    c = rng.normal(size=d)
    v = rng.normal(size=d)
    q = v @ np.linalg.solve(A, v)
    t = v @ c + rng.uniform(-0.9, 0.9) * math.sqrt(q)
    sl = slice_ellipsoid(c, A, v, t)
    # boundary points of the slice lie on the hyperplane and on the ellipsoid boundary
    for _ in range(5):
        u = rng.normal(size=d - 1)
        u /= math.sqrt(u @ sl.shape @ u)
        y = sl.center + sl.frame @ u
        assert v @ y == pytest.approx(t, abs=1e-9 * (1 + abs(t)))
        assert (y - c) @ A @ (y - c) == pytest.approx(1.0, abs=1e-8)


def test_restart_box_unit_interval():
    K = restart_box([0.25], [[1.0]])
    np.testing.assert_allclose(K.A, [[1], [-1]])
    np.testing.assert_allclose(K.b, [-0.75, -1.25])


def test_restart_box_volume():
    A = np.array([[4.0, 1.0], [1.0, 2.0]])
    K = restart_box([0.0, 0.0], A)
    # the box w + A^{-1/2} [-1, 1]^d has volume 2^d det(A)^{-1/2}
    assert box_log_volume(A) == pytest.approx(2 * math.log(2) - 0.5 * math.log(7))
    # its vertices: w + A^{-1/2} s for s in {-1, 1}^2
    evals, evecs = np.linalg.eigh(A)
    inv_root = (evecs / np.sqrt(evals)) @ evecs.T
    for s in ([1, 1], [1, -1], [-1, 1], [-1, -1]):
        slack = K.slacks(inv_root @ np.array(s, dtype=float))
        assert slack.min() == pytest.approx(0, abs=1e-12)


def test_hyperplane_offset_examples():
    assert hyperplane_offset([0, 1], [0, 1], [0.3, 0.4]) == 0.0
    off = hyperplane_offset([F(1, 2), F(-1, 2)], [1, 0], [0.3, 0.4])
    assert off == pytest.approx(-0.35)
    # y1 - y2 = 2 * offset
    assert 2 * off == pytest.approx(-0.7)


def test_hyperplane_offset_matches_integer_level():
    # W = {x3 = 0} in R^3, z = (1, 1, 1) projects to v = (1, 1, 0)
    x_k = np.array([0.3, 1.1, 0.0])
    off = hyperplane_offset([1, 1, 0], [1, 1, 1], x_k)
    point = np.array([0.4, off - 0.4, 0.0])
    assert np.array([1, 1, 1]) @ point == pytest.approx(round(1.4))


def test_integral_levels():
    sub = SubspaceState.full(2)
    K = Polytope.box([0.3, 0.4], 0.45)
    assert integral_levels(sub, K, [0, 1]) == [0]
    assert integral_levels(sub, K, [1, 1]) == [0, 1]


def reduce_square(center, radius, v, z, check=True, domain=None):
    sub = SubspaceState.full(2)
    K = Polytope.box(center, radius)
    c = approx_volumetric_center(K, K.interior, 1e-14)
    info = []
    out = reduce_dimension(sub, K, c, LatticeState.standard(2), v, z, check=check, info=info,
                           domain=domain)
    return (*out, info[0], K)


def test_reduce_axis_example():
    sub, box, center, lat, info, K = reduce_square([0.3, 0.4], 0.45, [0, 1], [0, 1])
    assert info.level == 0
    assert sub.d == 1 and sub.offsets == [0]
    assert sub.contains_exact([5, 0]) and not sub.contains_exact([5, 1])
    assert same_lattice(lat.basis, [[1, 0]])
    assert box.m == 2 and center.x.shape == (1,)
    np.testing.assert_allclose(sub.x0[1], 0.0, atol=1e-15)
    # the restart box holds the slice of K: x1 in [-0.15, 0.75]
    for x1 in (-0.15, 0.75):
        assert box.contains(sub.to_reduced([x1, 0.0]), 1e-12)
    # recorded volume is the length of the restart interval
    assert info.log_volume == pytest.approx(math.log(-(box.b[0] + box.b[1])))


def test_reduce_refuses_two_levels():
    with pytest.raises(AmbiguousHyperplane) as err:
        reduce_square([0.3, 0.4], 0.45, [1, 1], [1, 1])
    assert err.value.levels == [0, 1]


def test_reduce_unchecked_uses_rounding():
    sub, *_ = reduce_square([0.3, 0.4], 0.02, [0, 1], [0, 1], check=False)
    assert sub.offsets == [0]


def test_reduce_diagonal_projects_lattice():
    sub, box, center, lat, info, K = reduce_square([0.4, 0.3], 0.3, [1, 1], [1, 1])
    assert sub.offsets == [1]
    assert sub.contains_exact([1, 0]) and sub.contains_exact([0, 1])
    assert same_lattice(lat.basis, [[F(1, 2), F(-1, 2)]])
    assert (lat.basis == lat.preimages @ np.array([[F(1, 2), F(-1, 2)], [F(-1, 2), F(1, 2)]])).all()


def test_reduce_with_domain_clips():
    dom = (np.zeros(2), np.ones(2))
    plain = reduce_square([0.5, 0.5], 0.4, [1, -1], [1, -1])
    clipped = reduce_square([0.5, 0.5], 0.4, [1, -1], [1, -1], domain=dom)
    assert not plain[4].clipped and clipped[4].clipped
    sub, box = clipped[0], clipped[1]
    assert box.m > plain[1].m
    for x in ([0, 0], [1, 1]):
        assert box.contains(sub.to_reduced(x), 1e-9)
    assert not box.contains(sub.to_reduced([2, 2]), 1e-9)


def test_clip_skips_degenerate_intersection():
    # the slice x1 + x2 = 0 meets [0, 1]^2 only at the origin
    sub = SubspaceState([0.0, 0.0], np.array([[1.0], [-1.0]]) / math.sqrt(2), [[1, 1]], [0])
    box = restart_box([0.0], [[1.0]])
    assert clip_to_domain(box, sub, (np.zeros(2), np.ones(2))) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_frame_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    d = int(rng.integers(1, n + 1))
    sub = SubspaceState(rng.normal(size=n), q[:, :d])
    y = rng.normal(size=d)
    np.testing.assert_allclose(sub.to_reduced(sub.to_ambient(y)), y, atol=1e-12)
    assert sub.orthonormality_error() <= 1e-12


def test_subspace_exact_projection_and_json():
    sub = SubspaceState([0.0, 0.0, 0.0], np.eye(3)[:, :2], [[0, 0, 1]], [2])
    p = sub.project_exact([1, 2, 5])
    assert list(p) == [1, 2, 2]
    assert sub.contains_exact(p)
    data = sub.to_json()
    assert data["normals"] == [[0, 0, 1]] and data["offsets"] == [2]


def test_outer_scale():
    assert outer_scale(4, 2) == pytest.approx(48.0)
