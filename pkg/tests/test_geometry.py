import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothsdp.exceptions import DegenerateRetractionError, DimensionMismatchError
from smoothsdp.geometry import FEASIBILITY_TOL, ProductOfSpheres, ProductOfStiefel, Sphere


def manifolds():
    return [Sphere(6, 3), ProductOfSpheres(7, 3), ProductOfStiefel(3, 2, 4), ProductOfStiefel(2, 3, 3)]


manifold_ids = ["sphere", "spheres", "stiefel", "stiefel-square"]


@pytest.mark.parametrize("M", manifolds(), ids=manifold_ids)
def test_projection_properties(M, rng):
    Y = M.random_point(rng)
    Z, W = rng.standard_normal((2, M.n, M.p))
    PZ, PW = M.project_tangent(Y, Z), M.project_tangent(Y, W)
    np.testing.assert_allclose(M.project_tangent(Y, PZ), PZ, atol=1e-12 * np.linalg.norm(PZ))
    assert np.vdot(PZ, W) == pytest.approx(np.vdot(Z, PW), rel=1e-12, abs=1e-12)
    assert abs(np.vdot(Z - PZ, PZ)) <= 1e-12 * np.linalg.norm(Z) ** 2
    for N in M.normal_basis(Y):
        assert abs(np.vdot(N, PZ)) <= 1e-12 * np.linalg.norm(Z)


@pytest.mark.parametrize("M", manifolds(), ids=manifold_ids)
def test_tangent_invariant(M, rng):
    Y = M.random_point(rng)
    Z = M.random_tangent(Y, rng)
    assert np.linalg.norm(Z) == pytest.approx(1.0)
    # linearized constraints A(Z Y^T + Y Z^T) vanish
    for N in M.normal_basis(Y):
        assert abs(2 * np.vdot(N, Z)) <= 1e-10


@pytest.mark.parametrize("M", manifolds(), ids=manifold_ids)
def test_retraction(M, rng):
    Y = M.random_point(rng)
    np.testing.assert_allclose(M.retract(Y, np.zeros_like(Y)), Y, atol=1e-15)
    Z = M.random_tangent(Y, rng)
    ratios = []
    for t in (1e-2, 1e-3, 1e-4):
        R = M.retract(Y, t * Z)
        assert M.feasibility_residual(R) <= FEASIBILITY_TOL
        ratios.append(np.linalg.norm(R - Y - t * Z) / t**2)
    assert max(ratios) < 10 * ratios[0] + 1e-6


@pytest.mark.parametrize("M", manifolds(), ids=manifold_ids)
def test_dimension_by_tangent_rank(M, rng):
    Y = M.random_point(rng)
    T = np.stack([M.random_tangent(Y, s).ravel() for s in range(M.n * M.p + 1)])
    assert np.linalg.matrix_rank(T, tol=1e-8) == M.dimension()


def test_dimensions():
    assert Sphere(5, 2).dimension() == 9
    assert ProductOfSpheres(5, 2).dimension() == 5
    assert ProductOfStiefel(3, 2, 4).dimension() == 24 - 9


def test_sphere_examples():
    M = Sphere(4, 1)
    Y = np.array([[1.0], [0], [0], [0]])
    Z = np.array([[0.0], [1], [0], [0]])
    np.testing.assert_array_equal(M.project_tangent(Y, Z), Z)
    np.testing.assert_allclose(M.retract(Y, Z).ravel(), [2**-0.5, 2**-0.5, 0, 0])


def test_spheres_normal_direction(rng):
    M = ProductOfSpheres(5, 3)
    Y = M.random_point(rng)
    np.testing.assert_allclose(M.project_tangent(Y, Y), 0, atol=1e-15)
    M1 = ProductOfSpheres(2, 1)
    out = M1.project_tangent(np.array([[1.0], [1.0]]), np.array([[2.0], [3.0]]))
    np.testing.assert_array_equal(out, [[0.0], [0.0]])


def test_random_point_is_deterministic():
    M = ProductOfSpheres(6, 2)
    np.testing.assert_array_equal(M.random_point(3), M.random_point(3))
    assert M.feasibility_residual(M.random_point(3)) <= FEASIBILITY_TOL


def test_stiefel_square_is_orthogonal():
    Y = ProductOfStiefel(1, 2, 2).random_point(0)
    np.testing.assert_allclose(Y @ Y.T, np.eye(2), atol=1e-14)


def test_random_tangents_independent():
    M = ProductOfSpheres(4, 3)
    Y = M.random_point(0)
    Z1, Z2 = M.random_tangent(Y, 1), M.random_tangent(Y, 2)
    G = np.array([[np.vdot(a, b) for b in (Z1, Z2)] for a in (Z1, Z2)])
    assert np.linalg.det(G) > 1e-6


def test_degenerate_row_is_named():
    M = ProductOfSpheres(3, 2)
    V = np.array([[1.0, 0], [0, 0], [0, 1]])
    with pytest.raises(DegenerateRetractionError) as info:
        M.project(V)
    assert info.value.index == 1


def test_degenerate_block_is_named():
    M = ProductOfStiefel(2, 2, 2)
    V = np.vstack([np.eye(2), [[1.0, 1.0], [1.0, 1.0]]])
    with pytest.raises(DegenerateRetractionError) as info:
        M.project(V)
    assert info.value.index == 1


def test_stiefel_requires_p_ge_d():
    with pytest.raises(ValueError):
        ProductOfStiefel(2, 3, 2)


def test_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        Sphere(3, 2).project_tangent(np.ones((3, 2)), np.ones((2, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_spheres_projection_is_idempotent(n, p, seed):
    M = ProductOfSpheres(n, p)
    rng = np.random.default_rng(seed)
    Y = M.random_point(rng)
    Z = rng.standard_normal((n, p))
    P = M.project_tangent(Y, Z)
    np.testing.assert_allclose(M.project_tangent(Y, P), P, atol=1e-12 * (1 + np.linalg.norm(P)))
