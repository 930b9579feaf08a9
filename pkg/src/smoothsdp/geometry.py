"""Manifolds of feasible factors for the three smooth constraint classes.

=====================  ==========================  ============================
constraint on X        manifold of Y (n x p)       normal space at Y
=====================  ==========================  ============================
Tr(X) = 1              unit sphere                 span{Y}
diag(X) = 1            product of n spheres        {Diag(v) Y}
X_ii = I_d (q blocks)  product of q Stiefel        {blkdiag(sym B_i) Y}
=====================  ==========================  ============================

All manifolds are Riemannian submanifolds of R^{n x p} with the Frobenius
metric.  Retractions are metric projections, so they are second order.
"""
from __future__ import annotations

import numpy as np

from .exceptions import DegenerateRetractionError, DimensionMismatchError

FEASIBILITY_TOL = 1e-12


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


class Manifold:
    """Base class; subclasses fix ``n``, ``p`` and the constraint geometry."""

    name = "manifold"

    def __init__(self, n, p):
        self.n = int(n)
        self.p = int(p)
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")

    # number of scalar constraints in A(YY^T) = b
    @property
    def m(self):
        raise NotImplementedError

    def dimension(self):
        return self.n * self.p - self.m

    def with_rank(self, p):
        """Same constraint class at a different rank."""
        raise NotImplementedError

    def _check_shape(self, Y):
        Y = np.asarray(Y, dtype=float)
        if Y.shape != (self.n, self.p):
            raise DimensionMismatchError(
                f"expected array of shape {(self.n, self.p)}, got {Y.shape}"
            )
        return Y

    def project_tangent(self, Y, Z):
        raise NotImplementedError

    def retract(self, Y, Z):
        raise NotImplementedError

    def project(self, V):
        """Metric projection of an arbitrary matrix onto the manifold."""
        raise NotImplementedError

    def feasibility_residual(self, Y):
        raise NotImplementedError

    def normal_basis(self, Y):
        """Matrices ``A_i Y`` spanning the normal space at ``Y``."""
        raise NotImplementedError

    def random_point(self, seed=None):
        rng = _rng(seed)
        for _ in range(100):
            try:
                return self.project(rng.standard_normal((self.n, self.p)))
            except DegenerateRetractionError:
                continue
        raise RuntimeError("could not sample a non-degenerate point")

    def random_tangent(self, Y, seed=None):
        """Unit-norm tangent vector at ``Y`` drawn from a projected Gaussian."""
        if self.dimension() == 0:
            raise ValueError("tangent space is trivial (dimension 0)")
        rng = _rng(seed)
        Y = self._check_shape(Y)
        for _ in range(100):
            Z = self.project_tangent(Y, rng.standard_normal(Y.shape))
            nz = np.linalg.norm(Z)
            if nz > 1e-8:
                return Z / nz
        raise RuntimeError("could not sample a non-zero tangent vector")

    def lift(self, Y):
        """Append a zero column: ``[Y | 0]`` on the manifold of rank ``p + 1``."""
        Y = self._check_shape(Y)
        return np.hstack([Y, np.zeros((self.n, 1))])

    def typical_dist(self):
        return np.sqrt(self.dimension())

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, p={self.p})"


class Sphere(Manifold):
    """Unit Frobenius sphere ``{Y : ||Y|| = 1}``: the fixed-trace class."""

    name = "sphere"

    @property
    def m(self):
        return 1

    def with_rank(self, p):
        return Sphere(self.n, p)

    def project_tangent(self, Y, Z):
        Y = self._check_shape(Y)
        Z = self._check_shape(Z)
        return Z - np.vdot(Y, Z) * Y

    def project(self, V):
        V = self._check_shape(V)
        nv = np.linalg.norm(V)
        if nv < 1e-300 or not np.isfinite(nv):
            raise DegenerateRetractionError("cannot normalize a zero matrix")
        return V / nv

    def retract(self, Y, Z):
        return self.project(self._check_shape(Y) + Z)

    def feasibility_residual(self, Y):
        Y = self._check_shape(Y)
        return abs(np.vdot(Y, Y) - 1.0)

    def normal_basis(self, Y):
        return [self._check_shape(Y).copy()]


class ProductOfSpheres(Manifold):
    """Rows of ``Y`` on the unit sphere of R^p: the fixed-diagonal class.

    Also known as the oblique manifold.  This is the search space of the
    Max-Cut relaxation.
    """

    name = "product_of_spheres"

    @property
    def m(self):
        return self.n

    def with_rank(self, p):
        return ProductOfSpheres(self.n, p)

    def project_tangent(self, Y, Z):
        Y = self._check_shape(Y)
        Z = self._check_shape(Z)
        return Z - np.sum(Z * Y, axis=1, keepdims=True) * Y

    def project(self, V):
        V = self._check_shape(V)
        norms = np.linalg.norm(V, axis=1)
        bad = np.flatnonzero(~(norms > 1e-150) | ~np.isfinite(norms))
        if bad.size:
            raise DegenerateRetractionError(f"row {bad[0]} is zero", index=int(bad[0]))
        return V / norms[:, None]

    def retract(self, Y, Z):
        return self.project(self._check_shape(Y) + Z)

    def feasibility_residual(self, Y):
        Y = self._check_shape(Y)
        return float(np.max(np.abs(np.sum(Y * Y, axis=1) - 1.0)))

    def normal_basis(self, Y):
        Y = self._check_shape(Y)
        out = []
        for i in range(self.n):
            N = np.zeros_like(Y)
            N[i] = Y[i]
            out.append(N)
        return out


class ProductOfStiefel(Manifold):
    """``q`` stacked ``d x p`` blocks, each with orthonormal rows (``p >= d``).

    This is the fixed-diagonal-blocks class, ``X_ii = I_d``.
    """

    name = "product_of_stiefel"

    def __init__(self, q, d, p):
        self.q = int(q)
        self.d = int(d)
        if self.q < 1 or self.d < 1:
            raise ValueError("q and d must be positive")
        if int(p) < self.d:
            raise ValueError(f"Stiefel blocks need p >= d (got p={p}, d={d})")
        super().__init__(self.q * self.d, p)

    @property
    def m(self):
        return self.q * self.d * (self.d + 1) // 2

    def with_rank(self, p):
        return ProductOfStiefel(self.q, self.d, p)

    def _blocks(self, Y):
        return Y.reshape(self.q, self.d, self.p)

    def project_tangent(self, Y, Z):
        Y = self._check_shape(Y)
        Z = self._check_shape(Z)
        Yb, Zb = self._blocks(Y), self._blocks(Z)
        sym = _sym(Zb @ np.swapaxes(Yb, 1, 2))
        return (Zb - sym @ Yb).reshape(self.n, self.p)

    def project(self, V):
        V = self._check_shape(V)
        U, s, Wt = np.linalg.svd(self._blocks(V), full_matrices=False)
        smin = s[:, -1]
        scale = np.maximum(s[:, 0], 1e-300)
        bad = np.flatnonzero(~(smin > 1e-12 * scale) | ~np.isfinite(smin))
        if bad.size:
            raise DegenerateRetractionError(
                f"block {bad[0]} is rank deficient", index=int(bad[0])
            )
        return (U @ Wt).reshape(self.n, self.p)

    def retract(self, Y, Z):
        return self.project(self._check_shape(Y) + Z)

    def feasibility_residual(self, Y):
        Yb = self._blocks(self._check_shape(Y))
        G = Yb @ np.swapaxes(Yb, 1, 2) - np.eye(self.d)
        return float(np.max(np.abs(G)))

    def normal_basis(self, Y):
        Y = self._check_shape(Y)
        Yb = self._blocks(Y)
        out = []
        for i in range(self.q):
            for a in range(self.d):
                for b in range(a, self.d):
                    E = np.zeros((self.d, self.d))
                    E[a, b] = E[b, a] = 1.0
                    N = np.zeros((self.q, self.d, self.p))
                    N[i] = E @ Yb[i]
                    out.append(N.reshape(self.n, self.p))
        return out

    def __repr__(self):
        return f"ProductOfStiefel(q={self.q}, d={self.d}, p={self.p})"
