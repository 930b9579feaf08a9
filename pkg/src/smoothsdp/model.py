"""Smooth SDPs ``min <C, X> s.t. A(X) = b, X psd`` and their factored calculus.

Everything is expressed through the multipliers ``mu(Y)``, the least-squares
solution of ``A(A*(mu) Y Y^T) = A(C Y Y^T)``, and the dual matrix
``S(Y) = C - A*(mu(Y))``:

* Riemannian gradient: ``grad f(Y) = 2 S Y``
* Riemannian Hessian:  ``Hess f(Y)[Z] = 2 Proj_Y(S Z)``

For the three built-in classes ``mu`` has a closed form; the general class
solves the ``m x m`` Gram system ``G mu = A(C Y Y^T)`` with
``G_ij = <A_i Y, A_j Y>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConstraintQualificationError, InfeasiblePointError
from .geometry import ProductOfSpheres, ProductOfStiefel, Sphere, _sym
from .linalg import SparseSymMatrix, spectral_norm_estimate, sym_apply

CQ_RTOL = 1e-10


@dataclass(frozen=True)
class CQReport:
    """Outcome of a constraint-qualification check at one point.

    ``sigma_min`` is the smallest eigenvalue of the Gram matrix
    ``G_ij = <A_i Y, A_j Y>`` (built-in classes report the closed-form value).
    """

    ok: bool
    sigma_min: float
    detail: str = ""


class ConstraintClass:
    """Linear constraints ``A(X) = b`` on symmetric ``n x n`` matrices."""

    name = "constraints"
    #: True when I_n lies in the range of A*, enabling the simplified gap bound
    trace_constant = False

    def num_constraints(self, n):
        raise NotImplementedError

    def max_trace(self, n):
        raise NotImplementedError

    def manifold(self, n, p):
        raise NotImplementedError(f"{self.name} constraints have no built-in manifold")

    def multipliers(self, Y, CY):
        raise NotImplementedError

    def adjoint_apply(self, mu, V):
        """Return ``A*(mu) @ V``."""
        raise NotImplementedError

    def adjoint_matrix(self, mu, n):
        """``A*(mu)`` as a scipy sparse matrix."""
        raise NotImplementedError

    def dual_objective(self, mu):
        """``<b, mu>``."""
        raise NotImplementedError

    def check_cq(self, Y):
        raise NotImplementedError

    def residual(self, Y):
        """Return ``(max violation, index of the worst constraint)``."""
        raise NotImplementedError


class FixedTrace(ConstraintClass):
    """``Tr(X) = 1``; factors live on the unit sphere."""

    name = "trace"
    trace_constant = True

    def num_constraints(self, n):
        return 1

    def max_trace(self, n):
        return 1.0

    def manifold(self, n, p):
        return Sphere(n, p)

    def multipliers(self, Y, CY):
        return np.array([np.vdot(CY, Y)])

    def adjoint_apply(self, mu, V):
        return mu[0] * V

    def adjoint_matrix(self, mu, n):
        return mu[0] * sp.identity(n, format="csr")

    def dual_objective(self, mu):
        return float(mu[0])

    def check_cq(self, Y):
        nrm2 = float(np.vdot(Y, Y))
        return CQReport(nrm2 > 0, nrm2, "Y != 0" if nrm2 > 0 else "Y = 0")

    def residual(self, Y):
        return abs(float(np.vdot(Y, Y)) - 1.0), 0

    def __repr__(self):
        return "FixedTrace()"


class FixedDiagonal(ConstraintClass):
    """``diag(X) = 1``; factors have unit-norm rows (Max-Cut and friends)."""

    name = "diag"
    trace_constant = True

    def num_constraints(self, n):
        return n

    def max_trace(self, n):
        return float(n)

    def manifold(self, n, p):
        return ProductOfSpheres(n, p)

    def multipliers(self, Y, CY):
        # mu = diag(C Y Y^T)
        return np.einsum("ij,ij->i", CY, Y)

    def adjoint_apply(self, mu, V):
        return mu[:, None] * V if V.ndim == 2 else mu * V

    def adjoint_matrix(self, mu, n):
        return sp.diags(mu, format="csr")

    def dual_objective(self, mu):
        return float(np.sum(mu))

    def check_cq(self, Y):
        row2 = np.einsum("ij,ij->i", Y, Y)
        smin = float(row2.min()) if row2.size else 0.0
        if smin > 0:
            return CQReport(True, smin, "all rows non-zero")
        return CQReport(False, smin, f"row {int(np.argmin(row2))} is zero")

    def residual(self, Y):
        r = np.abs(np.einsum("ij,ij->i", Y, Y) - 1.0)
        i = int(np.argmax(r))
        return float(r[i]), i

    def __repr__(self):
        return "FixedDiagonal()"


class FixedDiagonalBlocks(ConstraintClass):
    """``X_ii = I_d`` for ``q`` diagonal blocks of size ``d``.

    Multipliers are stored as a ``(q, d, d)`` array of symmetric blocks.
    """

    name = "blockdiag"
    trace_constant = True

    def __init__(self, d, q):
        self.d = int(d)
        self.q = int(q)
        if self.d < 1 or self.q < 1:
            raise ValueError("d and q must be positive")

    def num_constraints(self, n):
        return self.q * self.d * (self.d + 1) // 2

    def max_trace(self, n):
        return float(self.q * self.d)

    def manifold(self, n, p):
        return ProductOfStiefel(self.q, self.d, p)

    def _blocks(self, V):
        return V.reshape(self.q, self.d, -1)

    def multipliers(self, Y, CY):
        Yb, CYb = self._blocks(Y), self._blocks(CY)
        return _sym(CYb @ np.swapaxes(Yb, 1, 2))

    def adjoint_apply(self, mu, V):
        shape = V.shape
        Vb = V.reshape(self.q, self.d, -1)
        return (mu @ Vb).reshape(shape)

    def adjoint_matrix(self, mu, n):
        return sp.block_diag(list(mu), format="csr")

    def dual_objective(self, mu):
        return float(np.trace(mu, axis1=1, axis2=2).sum())

    def check_cq(self, Y):
        s = np.linalg.svd(self._blocks(Y), compute_uv=False)
        smin = s[:, -1] ** 2
        i = int(np.argmin(smin))
        if smin[i] > 0:
            return CQReport(True, float(smin[i]), "all blocks have full row rank")
        return CQReport(False, float(smin[i]), f"block {i} is rank deficient")

    def residual(self, Y):
        Yb = self._blocks(Y)
        G = np.abs(Yb @ np.swapaxes(Yb, 1, 2) - np.eye(self.d)).reshape(self.q, -1).max(axis=1)
        i = int(np.argmax(G))
        return float(G[i]), i

    def __repr__(self):
        return f"FixedDiagonalBlocks(d={self.d}, q={self.q})"


class GeneralLinear(ConstraintClass):
    """Arbitrary constraints ``<A_i, X> = b_i``.

    Supported for multipliers, gradients and certification only; there is no
    built-in retraction, so the staircase refuses these problems.

    Parameters
    ----------
    A : list of SparseSymMatrix or array_like
    b : array_like of length ``m``
    max_trace : float, optional
        Upper bound on ``Tr(X)`` over the feasible set.  When omitted it is
        derived from ``I_n = A*(nu)`` if such ``nu`` exists (then the trace is
        constant and equal to ``<b, nu>``).
    feasible_point : callable, optional
        ``feasible_point(p, seed) -> Y`` producing points with ``A(YY^T) = b``.
    """

    name = "general"

    def __init__(self, A, b, max_trace=None, feasible_point: Optional[Callable] = None):
        mats = []
        for Ai in A:
            if not isinstance(Ai, SparseSymMatrix):
                Ai = (SparseSymMatrix.from_scipy(Ai) if sp.issparse(Ai)
                      else SparseSymMatrix.from_dense(Ai))
            mats.append(Ai)
        if not mats:
            raise ValueError("at least one constraint is required")
        n = mats[0].n
        if any(Ai.n != n for Ai in mats):
            raise ValueError("constraint matrices must share one dimension")
        b = np.asarray(b, dtype=float).ravel()
        if b.size != len(mats):
            raise ValueError(f"b has length {b.size}, expected {len(mats)}")
        self.A = mats
        self.b = b
        self.n = n
        self._feasible_point = feasible_point
        self._max_trace = float(max_trace) if max_trace is not None else self._derive_trace()

    def _derive_trace(self):
        n = self.n
        if n > 200:
            return None
        M = np.stack([Ai.to_dense().ravel() for Ai in self.A], axis=1)
        nu, *_ = np.linalg.lstsq(M, np.eye(n).ravel(), rcond=None)
        if np.linalg.norm(M @ nu - np.eye(n).ravel()) <= 1e-10 * np.sqrt(n):
            return float(self.b @ nu)
        return None

    def num_constraints(self, n):
        return len(self.A)

    def max_trace(self, n):
        return self._max_trace

    def feasible_point(self, p, seed=None):
        if self._feasible_point is None:
            raise NotImplementedError("no feasible-point oracle was supplied")
        return np.asarray(self._feasible_point(p, seed), dtype=float)

    def _AY(self, Y):
        return [sym_apply(Ai, Y) for Ai in self.A]

    def gram(self, Y):
        AY = self._AY(Y)
        m = len(AY)
        G = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                G[i, j] = G[j, i] = np.vdot(AY[i], AY[j])
        return G, AY

    def _solve_gram(self, G, rhs):
        w = np.linalg.eigvalsh(G)
        scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
        if w[0] <= CQ_RTOL * scale:
            raise ConstraintQualificationError(
                f"Gram matrix is singular (sigma_min = {w[0]:.3e})", sigma_min=float(w[0])
            )
        try:
            cf = scipy.linalg.cho_factor(G)
        except np.linalg.LinAlgError as exc:
            raise ConstraintQualificationError(
                "Gram matrix is not positive definite", sigma_min=float(w[0])
            ) from exc
        return scipy.linalg.cho_solve(cf, rhs)

    def multipliers(self, Y, CY):
        G, AY = self.gram(Y)
        rhs = np.array([np.vdot(AiY, CY) for AiY in AY])
        return self._solve_gram(G, rhs)

    def project_tangent(self, Y, Z):
        G, AY = self.gram(Y)
        rhs = np.array([np.vdot(AiY, Z) for AiY in AY])
        nu = self._solve_gram(G, rhs)
        return Z - sum(c * AiY for c, AiY in zip(nu, AY))

    def adjoint_apply(self, mu, V):
        out = np.zeros_like(V, dtype=float)
        for c, Ai in zip(mu, self.A):
            if c:
                out += c * sym_apply(Ai, V)
        return out

    def adjoint_matrix(self, mu, n):
        out = sp.csr_matrix((n, n))
        for c, Ai in zip(mu, self.A):
            out = out + c * Ai.to_scipy()
        return out.tocsr()

    def dual_objective(self, mu):
        return float(self.b @ mu)

    def check_cq(self, Y):
        G, _ = self.gram(Y)
        w = np.linalg.eigvalsh(G)
        scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
        ok = bool(w[0] > CQ_RTOL * scale)
        detail = "A_i Y linearly independent" if ok else "A_i Y linearly dependent"
        return CQReport(ok, float(max(w[0], 0.0)) if ok else float(w[0]), detail)

    def residual(self, Y):
        r = np.abs(np.array([np.vdot(sym_apply(Ai, Y), Y) for Ai in self.A]) - self.b)
        i = int(np.argmax(r))
        return float(r[i]), i

    def __repr__(self):
        return f"GeneralLinear(m={len(self.A)}, n={self.n})"


class DualMatrix:
    """Implicit ``S = C - A*(mu)``; products never materialize ``S``."""

    def __init__(self, C: SparseSymMatrix, constraints: ConstraintClass, mu):
        self.C = C
        self.constraints = constraints
        self.mu = mu

    @property
    def shape(self):
        return (self.C.n, self.C.n)

    def matvec(self, V):
        V = np.asarray(V, dtype=float)
        return sym_apply(self.C, V) - self.constraints.adjoint_apply(self.mu, V)

    matmat = matvec
    __matmul__ = matvec

    def to_scipy(self):
        return (self.C.to_scipy() - self.constraints.adjoint_matrix(self.mu, self.C.n)).tocsr()

    def to_dense(self):
        S = self.to_scipy().toarray()
        return 0.5 * (S + S.T)

    def as_linear_operator(self):
        n = self.C.n
        return spla.LinearOperator((n, n), matvec=self.matvec, matmat=self.matvec,
                                   dtype=float)


@dataclass
class Evaluation:
    """Cached quantities at one point: cost, ``C Y``, ``mu`` and the gradient."""

    Y: np.ndarray
    cost: float
    CY: np.ndarray
    mu: np.ndarray
    grad: np.ndarray

    @property
    def grad_norm(self):
        return float(np.linalg.norm(self.grad))


class SmoothSDP:
    """``min <C, X>`` subject to ``A(X) = b, X psd`` with compact feasible set.

    Parameters
    ----------
    C : SparseSymMatrix, ndarray or scipy sparse matrix
        Symmetric cost matrix.
    constraints : ConstraintClass
    """

    def __init__(self, C, constraints: ConstraintClass):
        from ._validation import check_cost_matrix

        self.C = check_cost_matrix(C)
        self.constraints = constraints
        self.n = self.C.n
        if isinstance(constraints, FixedDiagonalBlocks) and constraints.d * constraints.q != self.n:
            raise ValueError(
                f"block structure d*q = {constraints.d * constraints.q} does not match n = {self.n}"
            )
        if isinstance(constraints, GeneralLinear) and constraints.n != self.n:
            raise ValueError("constraint matrices do not match the cost dimension")
        self.m = constraints.num_constraints(self.n)
        R = constraints.max_trace(self.n)
        if R is None or not np.isfinite(R) or R <= 0:
            raise ValueError("the feasible set must be compact: supply a finite positive max_trace")
        self.R = float(R)
        self._manifolds = {}
        self._cnorm = None

    @property
    def is_builtin(self):
        return not isinstance(self.constraints, GeneralLinear)

    def manifold(self, p):
        if p not in self._manifolds:
            self._manifolds[p] = self.constraints.manifold(self.n, p)
        return self._manifolds[p]

    def cost_norm(self):
        """Cached estimate of ``||C||_2``."""
        if self._cnorm is None:
            self._cnorm = spectral_norm_estimate(self.C) if self.C.nnz else 0.0
        return self._cnorm

    # -- feasibility ------------------------------------------------------
    def feasibility_residual(self, Y):
        return self.constraints.residual(np.asarray(Y, dtype=float))[0]

    def check_feasible(self, Y, tol=1e-8):
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2 or Y.shape[0] != self.n:
            raise InfeasiblePointError(f"expected {self.n} rows, got shape {Y.shape}")
        if not np.all(np.isfinite(Y)):
            raise InfeasiblePointError("Y has non-finite entries")
        r, i = self.constraints.residual(Y)
        if r > tol:
            raise InfeasiblePointError(
                f"constraint {i} violated by {r:.3e}", index=i, residual=r
            )
        return Y

    # -- calculus ---------------------------------------------------------
    def cost(self, Y):
        Y = np.asarray(Y, dtype=float)
        return float(np.vdot(sym_apply(self.C, Y), Y))

    def euclidean_gradient(self, Y):
        return 2.0 * sym_apply(self.C, Y)

    def multipliers(self, Y, CY=None):
        Y = np.asarray(Y, dtype=float)
        if CY is None:
            CY = sym_apply(self.C, Y)
        return self.constraints.multipliers(Y, CY)

    def dual_matrix(self, Y=None, mu=None):
        if mu is None:
            mu = self.multipliers(Y)
        return DualMatrix(self.C, self.constraints, mu)

    def evaluate(self, Y):
        Y = np.asarray(Y, dtype=float)
        CY = sym_apply(self.C, Y)
        mu = self.constraints.multipliers(Y, CY)
        grad = 2.0 * (CY - self.constraints.adjoint_apply(mu, Y))
        return Evaluation(Y, float(np.vdot(CY, Y)), CY, mu, grad)

    def gradient(self, Y):
        """Riemannian gradient in its dual form ``2 S(Y) Y``."""
        return self.evaluate(Y).grad

    def gradient_by_projection(self, Y):
        """Riemannian gradient as ``Proj_Y(2 C Y)``; independent of ``mu``."""
        return self.project_tangent(Y, self.euclidean_gradient(Y))

    def project_tangent(self, Y, Z):
        Y = np.asarray(Y, dtype=float)
        if isinstance(self.constraints, GeneralLinear):
            return self.constraints.project_tangent(Y, np.asarray(Z, dtype=float))
        return self.manifold(Y.shape[1]).project_tangent(Y, Z)

    def hessian_apply(self, Y, Z, mu=None):
        """``Hess f(Y)[Z] = 2 Proj_Y(S Z)`` for tangent ``Z``.

        The term ``S' Y`` from differentiating ``S`` is normal, so it drops.
        """
        Y = np.asarray(Y, dtype=float)
        if mu is None:
            mu = self.multipliers(Y)
        SZ = sym_apply(self.C, Z) - self.constraints.adjoint_apply(mu, Z)
        return 2.0 * self.project_tangent(Y, SZ)

    def check_constraint_qualification(self, Y) -> CQReport:
        return self.constraints.check_cq(np.asarray(Y, dtype=float))

    def __repr__(self):
        return f"SmoothSDP(n={self.n}, m={self.m}, constraints={self.constraints!r})"


def hessian_min_eig(problem: SmoothSDP, Y, iters=50, seed=0):
    """Estimate ``lambda_min`` of ``Hess f(Y)`` with a short Lanczos run.

    The operator ``Proj o Hess o Proj`` is used on all of R^{n x p}; it is
    zero on the normal space, so the result is ``min(lambda_min(Hess), 0)``
    whenever the normal space is non-trivial.
    """
    Y = np.asarray(Y, dtype=float)
    n, p = Y.shape
    mu = problem.multipliers(Y)

    def mv(v):
        Z = problem.project_tangent(Y, v.reshape(n, p))
        return problem.hessian_apply(Y, Z, mu).ravel()

    N = n * p
    op = spla.LinearOperator((N, N), matvec=mv, dtype=float)
    if N <= 3:
        M = op.matmat(np.eye(N))
        return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    rng = np.random.default_rng(seed)
    try:
        w = spla.eigsh(op, k=1, which="SA", v0=rng.standard_normal(N),
                       ncv=min(N, max(20, iters)), maxiter=iters, tol=1e-8,
                       return_eigenvectors=False)
        return float(w[0])
    except spla.ArpackNoConvergence as exc:
        if exc.eigenvalues.size:
            return float(np.min(exc.eigenvalues))
        raise
