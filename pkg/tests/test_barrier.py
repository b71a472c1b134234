import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intmin.barrier import (Polytope, approx_volumetric_center, evaluate_barrier, exact_hessian,
                            mu_exact, volumetric_value)
from intmin.checks import (barrier_point_checks, derivative_checks, random_interior_point,
                           random_polytope, sample_dikin)
from intmin.errors import InteriorViolation, NonConvergence, StructuralError

# x >= 0, -x >= -1, -x >= -2; minimizer of 1/2 ln(1/x^2 + 1/(1-x)^2 + 1/(2-x)^2),
# grid search over (0, 1) with step 1e-6
GRID_ARGMIN = 0.496933


def unit_box(n=2):
    return Polytope.box(np.zeros(n), 1.0)


def test_box_row_order():
    K = unit_box()
    np.testing.assert_array_equal(K.A, [[1, 0], [-1, 0], [0, 1], [0, -1]])
    np.testing.assert_array_equal(K.b, [-1, -1, -1, -1])


def test_polytope_validation():
    with pytest.raises(StructuralError):
        Polytope([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InteriorViolation) as err:
        Polytope(unit_box().A, unit_box().b, [1.0, 0.0])
    assert err.value.index == 1


def test_barrier_at_center():
    s = evaluate_barrier(unit_box(), [0.0, 0.0])
    np.testing.assert_allclose(s.H, 2 * np.eye(2))
    assert s.F == pytest.approx(math.log(2))
    np.testing.assert_allclose(s.sigma, [0.5] * 4)
    np.testing.assert_allclose(s.gradF, [0, 0], atol=1e-15)
    np.testing.assert_allclose(s.Q, np.eye(2))
    assert s.muLower == pytest.approx(0.5)


def test_barrier_off_center():
    s = evaluate_barrier(unit_box(), [0.5, 0.0])
    np.testing.assert_allclose(s.H, np.diag([40 / 9, 2]))
    assert s.F == pytest.approx(1.09240, abs=1e-5)
    np.testing.assert_allclose(s.sigma, [0.1, 0.9, 0.5, 0.5])
    assert s.sigma.sum() == pytest.approx(2, abs=1e-12)
    np.testing.assert_allclose(s.gradF, [26 / 15, 0], atol=1e-12)
    np.testing.assert_allclose(s.slacks, [1.5, 0.5, 1, 1])


def test_barrier_on_boundary():
    with pytest.raises(InteriorViolation) as err:
        evaluate_barrier(unit_box(), [1.0, 0.0])
    assert err.value.index == 1


def test_volumetric_value_matches_state():
    K = random_polytope(np.random.default_rng(3), 3, 9)
    x = K.interior
    assert volumetric_value(K, x) == pytest.approx(evaluate_barrier(K, x).F)


def test_center_of_square():
    c = approx_volumetric_center(unit_box(), [0.3, 0.2], 1e-10)
    np.testing.assert_allclose(c.x, [0, 0], atol=1e-5)
    assert c.decrement <= 1e-10


def test_center_of_interval():
    K = Polytope([[1.0], [-1.0]], [0.0, -3.0], [0.4])
    assert approx_volumetric_center(K, [2.9], 1e-12).x[0] == pytest.approx(1.5, abs=1e-6)


def test_center_with_redundant_row():
    K = Polytope([[1.0], [-1.0], [-1.0]], [0.0, -1.0, -2.0], [0.9])
    c = approx_volumetric_center(K, [0.9], 1e-14)
    assert c.x[0] == pytest.approx(GRID_ARGMIN, abs=1e-4)


@pytest.mark.parametrize("direction, tol, atol", [("hessian", 1e-12, 1e-5), ("q", 1e-7, 1e-3)])
def test_center_directions_agree(direction, tol, atol):
    # the Q surrogate converges only linearly, hence the looser tolerance
    K = random_polytope(np.random.default_rng(11), 3, 10)
    c = approx_volumetric_center(K, K.interior, tol, direction=direction)
    ref = approx_volumetric_center(K, K.interior, 1e-16)
    np.testing.assert_allclose(c.x, ref.x, atol=atol)


def test_center_iteration_cap():
    K = random_polytope(np.random.default_rng(2), 4, 12)
    with pytest.raises(NonConvergence):
        approx_volumetric_center(K, K.interior, 1e-14, max_iter=1, direction="q")


def test_exact_hessian_matches_differences():
    K = random_polytope(np.random.default_rng(4), 3, 10)
    s = evaluate_barrier(K, K.interior)
    h = 1e-6
    cols = [(evaluate_barrier(K, K.interior + h * e).gradF
             - evaluate_barrier(K, K.interior - h * e).gradF) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(exact_hessian(s), np.column_stack(cols), rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_derivative_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    K = random_polytope(rng, n, int(rng.integers(2 * n + 1, 13)))
    for _ in range(10):
        r = derivative_checks(K, random_interior_point(rng, K))
        assert r["gradRelErr"] <= 1e-5
        assert r["sandwichLow"] <= 0 and r["sandwichHigh"] <= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 8), st.integers(0, 2 ** 32 - 1))
def test_point_properties(n, extra, seed):
    rng = np.random.default_rng(seed)
    K = random_polytope(rng, n, 2 * n + extra)
    x = random_interior_point(rng, K)
    s = evaluate_barrier(K, x)
    assert s.sigma.sum() == pytest.approx(n, abs=1e-9)
    assert (s.sigma > 0).all() and (s.sigma <= 1 + 1e-12).all()
    assert all(v <= 0 for v in barrier_point_checks(K, x).values())


@pytest.mark.parametrize("seed", range(10))
def test_dikin_ellipsoid_inside(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    K = random_polytope(rng, n, int(rng.integers(2 * n + 1, 13)))
    c = approx_volumetric_center(K, K.interior, 1e-12)
    ys = sample_dikin(rng, c.x, c.H, 1000)
    assert (K.A @ ys.T - K.b[:, None] >= 0).all()
    # the samples really fill the ellipsoid
    radii = np.einsum("ij,jk,ik->i", ys - c.x, c.H, ys - c.x)
    assert radii.max() <= 1 + 1e-9 and radii.max() > 0.9


def test_mu_at_center_of_square():
    s = evaluate_barrier(unit_box(), [0.0, 0.0])
    assert mu_exact(s) == pytest.approx(0.5)
