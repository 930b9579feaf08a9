import numpy as np
import pytest
from scipy.stats import ortho_group

from smoothsdp.exceptions import ConstraintQualificationError, InfeasiblePointError
from smoothsdp.model import (
    FixedDiagonal,
    FixedDiagonalBlocks,
    FixedTrace,
    GeneralLinear,
    SmoothSDP,
    hessian_min_eig,
)

from conftest import normal_space_projection, random_problem

KINDS = ["trace", "diag", "blockdiag"]


def point(problem, p, rng):
    return problem.manifold(p).random_point(rng)


def test_R_values():
    assert SmoothSDP(np.eye(4), FixedTrace()).R == 1
    assert SmoothSDP(np.eye(4), FixedDiagonal()).R == 4
    assert SmoothSDP(np.eye(6), FixedDiagonalBlocks(2, 3)).R == 6


def test_block_structure_must_match():
    with pytest.raises(ValueError):
        SmoothSDP(np.eye(5), FixedDiagonalBlocks(2, 2))


def test_cost_examples(rng):
    P = SmoothSDP(np.zeros((4, 4)), FixedDiagonal())
    assert P.cost(point(P, 2, rng)) == 0
    P = SmoothSDP(np.eye(5), FixedDiagonal())
    assert P.cost(point(P, 3, rng)) == pytest.approx(5.0, abs=1e-13)


def test_multiplier_examples(rng):
    P = SmoothSDP(np.eye(4), FixedDiagonal())
    np.testing.assert_allclose(P.multipliers(point(P, 2, rng)), np.ones(4), atol=1e-14)
    P = random_problem("trace", 6, rng)
    Y = point(P, 2, rng)
    assert P.multipliers(Y) == pytest.approx(P.cost(Y))
    P = SmoothSDP(np.array([[0.0, 1], [1, 0]]), FixedDiagonal())
    np.testing.assert_array_equal(P.multipliers(np.array([[1.0], [1.0]])), [1.0, 1.0])


@pytest.mark.parametrize("kind", KINDS)
def test_multipliers_solve_gram_system(kind, rng):
    P = random_problem(kind, 8, rng)
    Y = point(P, 3, rng)
    mu = P.multipliers(Y)
    CY = P.C @ Y
    N = P.manifold(3).normal_basis(Y)
    # <A_i Y, C Y> = <A_i Y, A*(mu) Y> for every normal vector
    AmuY = P.constraints.adjoint_apply(mu, Y)
    for Ni in N:
        assert np.vdot(Ni, CY) == pytest.approx(np.vdot(Ni, AmuY), abs=1e-10 * P.cost_norm())


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_forms_agree(kind, rng):
    P = random_problem(kind, 10, rng)
    Y = point(P, 3, rng)
    g = P.gradient(Y)
    scale = P.cost_norm() * np.linalg.norm(Y)
    np.testing.assert_allclose(g, P.gradient_by_projection(Y), atol=1e-10 * scale)
    np.testing.assert_allclose(g, normal_space_projection(P, Y, 2 * (P.C @ Y)), atol=1e-10 * scale)


@pytest.mark.parametrize("kind", KINDS)
def test_directional_derivative(kind, rng):
    P = random_problem(kind, 8, rng)
    M = P.manifold(3)
    Y = M.random_point(rng)
    Z = M.random_tangent(Y, rng)
    g = np.vdot(P.gradient(Y), Z)
    errs = [abs((P.cost(M.retract(Y, t * Z)) - P.cost(Y)) / t - g) for t in (1e-3, 1e-4, 1e-5)]
    assert errs[1] < 0.2 * errs[0] and errs[2] < 0.2 * errs[1]


@pytest.mark.parametrize("kind", KINDS)
def test_hessian(kind, rng):
    P = random_problem(kind, 8, rng)
    M = P.manifold(3)
    Y = M.random_point(rng)
    Z, W = M.random_tangent(Y, rng), M.random_tangent(Y, rng)
    HZ, HW = P.hessian_apply(Y, Z), P.hessian_apply(Y, W)
    assert np.vdot(W, HZ) == pytest.approx(np.vdot(Z, HW), rel=1e-10)
    S = P.dual_matrix(Y)
    q = np.vdot(Z, HZ)
    assert q == pytest.approx(2 * np.vdot(Z, S @ Z), rel=1e-12)
    # second derivative of f along the retraction, corrected for the
    # retraction's normal acceleration through the gradient
    t = 1e-4
    fpp = (P.cost(M.retract(Y, t * Z)) - 2 * P.cost(Y) + P.cost(M.retract(Y, -t * Z))) / t**2
    # metric projection is a second-order retraction, so no correction is needed
    assert fpp == pytest.approx(q, rel=1e-4)


def test_identity_cost_is_flat(rng):
    P = SmoothSDP(np.eye(6), FixedDiagonal())
    Y = point(P, 2, rng)
    np.testing.assert_allclose(P.gradient(Y), 0, atol=1e-14)
    Z = P.manifold(2).random_tangent(Y, rng)
    np.testing.assert_allclose(P.hessian_apply(Y, Z), 0, atol=1e-14)
    np.testing.assert_allclose(P.dual_matrix(Y).to_dense(), 0, atol=1e-14)


@pytest.mark.parametrize("kind", KINDS)
def test_S_depends_on_YYt_only(kind, rng):
    P = random_problem(kind, 8, rng)
    Y = point(P, 3, rng)
    Q = ortho_group.rvs(3, random_state=1)
    np.testing.assert_allclose(np.ravel(P.multipliers(Y @ Q)), np.ravel(P.multipliers(Y)), atol=1e-12 * P.cost_norm())
    np.testing.assert_allclose(P.dual_matrix(Y @ Q).to_dense(), P.dual_matrix(Y).to_dense(), atol=1e-12 * P.cost_norm())


def test_dual_matrix_operator_matches_dense(rng):
    P = random_problem("blockdiag", 8, rng)
    S = P.dual_matrix(point(P, 3, rng))
    v = rng.standard_normal(8)
    np.testing.assert_allclose(S.matvec(v), S.to_dense() @ v, atol=1e-12)
    np.testing.assert_allclose(S.to_scipy().toarray(), S.to_dense(), atol=1e-14)


def test_check_feasible_names_row(rng):
    P = SmoothSDP(np.eye(3), FixedDiagonal())
    Y = np.array([[1.0, 0], [0.0, 2.0], [0.6, 0.8]])
    with pytest.raises(InfeasiblePointError) as info:
        P.check_feasible(Y)
    assert info.value.index == 1


def test_builtin_cq(rng):
    P = SmoothSDP(np.eye(3), FixedDiagonal())
    assert P.check_constraint_qualification(point(P, 2, rng)).ok


def test_general_linear_cq_ok():
    cons = GeneralLinear([np.diag([1.0, 0]), np.diag([0.0, 1])], [1.0, 1.0])
    P = SmoothSDP(np.zeros((2, 2)), cons)
    assert P.check_constraint_qualification(np.eye(2)).ok
    assert P.R == pytest.approx(2.0)


def test_general_linear_matches_builtin(rng):
    n = 5
    C = rng.standard_normal((n, n))
    C = C + C.T
    A = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1
        A.append(E)
    G = SmoothSDP(C, GeneralLinear(A, np.ones(n)))
    D = SmoothSDP(C, FixedDiagonal())
    assert G.R == pytest.approx(n)
    Y = D.manifold(2).random_point(rng)
    np.testing.assert_allclose(G.multipliers(Y), D.multipliers(Y), atol=1e-12)
    np.testing.assert_allclose(G.gradient(Y), D.gradient(Y), atol=1e-12)
    assert not G.is_builtin


def test_general_linear_requires_compactness():
    with pytest.raises(ValueError):
        SmoothSDP(np.eye(2), GeneralLinear([np.diag([1.0, 0])], [1.0]))


def test_colinear_normals_violate_cq():
    cons = GeneralLinear([np.eye(2), np.diag([1.0, 0.25])], [1.0, 1.0], max_trace=1.0)
    P = SmoothSDP(np.eye(2), cons)
    for y in (1.0, -1.0):
        Y = np.array([[y], [0.0]])
        rep = P.check_constraint_qualification(Y)
        assert not rep.ok
        assert abs(rep.sigma_min) <= 1e-12
        with pytest.raises(ConstraintQualificationError):
            P.multipliers(Y)


def test_hessian_min_eig_on_sphere():
    P = SmoothSDP(np.diag([1.0, 2.0, 5.0]), FixedTrace())
    # at the minimizer the tangent spectrum is 2 (C - I) on e_1^perp = {2, 8};
    # the operator is zero on the normal direction, so the estimate is 0
    assert hessian_min_eig(P, np.array([[1.0], [0], [0]])) == pytest.approx(0.0, abs=1e-10)
    # at the maximizer: 2 (C - 5 I) on e_3^perp = {-8, -6}
    assert hessian_min_eig(P, np.array([[0.0], [0], [1]])) == pytest.approx(-8.0, abs=1e-8)
