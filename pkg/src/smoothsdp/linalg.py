"""Sparse symmetric matrices and the eigenvalue kernels used for certification.

The cost matrix ``C`` and the dual matrix ``S(Y)`` are only ever touched through
matrix products, so the sparse type here keeps one triangle in coordinate form
and a frozen CSR copy of the full symmetric matrix for products.  Extreme
eigenvalues are estimated with Lanczos (ARPACK) and then enclosed with
Cholesky-based bisection, which is what makes the reported ``lambda_min``
trustworthy enough to certify optimality.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import (
    DimensionMismatchError,
    InvalidBracketError,
    LanczosConvergenceError,
)

# Above this size the Cholesky test switches from a dense copy to a sparse
# LDL^T factorization.
DENSE_LIMIT = 4096


class SparseSymMatrix:
    """Real symmetric ``n x n`` matrix stored as one triangle of coordinates.

    Entries are normalized on construction: pairs with ``i > j`` are flipped
    into the upper triangle, duplicate ``(i, j)`` pairs are summed and explicit
    zeros are dropped.  The result is immutable.

    Parameters
    ----------
    n : int
        Dimension.
    rows, cols, values : array_like
        Coordinate triplets, 0-based.  Only one of ``(i, j)`` / ``(j, i)``
        should be given for an off-diagonal entry; both are summed otherwise.
    """

    __slots__ = ("n", "rows", "cols", "values", "_csr")

    def __init__(self, n, rows=(), cols=(), values=()):
        n = int(n)
        if n < 0:
            raise ValueError("dimension must be non-negative")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n:
                raise IndexError(f"coordinate out of range for n={n}")
            if not np.all(np.isfinite(values)):
                raise ValueError("matrix entries must be finite")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        upper = sp.coo_matrix((values, (lo, hi)), shape=(n, n)).tocsr()
        upper.sum_duplicates()
        upper.eliminate_zeros()
        coo = upper.tocoo()
        self.n = n
        self.rows = coo.row.astype(np.int64)
        self.cols = coo.col.astype(np.int64)
        self.values = coo.data.astype(float)
        for arr in (self.rows, self.cols, self.values):
            arr.setflags(write=False)
        strict = sp.triu(upper, k=1)
        full = (upper + strict.T).tocsr()
        full.sort_indices()
        self._csr = full

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_dense(cls, A, atol=1e-12):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}")
        scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
        if not np.allclose(A, A.T, rtol=0.0, atol=atol * scale):
            raise ValueError("matrix is not symmetric")
        i, j = np.nonzero(np.triu(A))
        return cls(A.shape[0], i, j, A[i, j])

    @classmethod
    def from_scipy(cls, A, atol=1e-12):
        A = sp.csr_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}")
        diff = abs(A - A.T)
        scale = max(1.0, float(abs(A).max())) if A.nnz else 1.0
        if diff.nnz and diff.max() > atol * scale:
            raise ValueError("matrix is not symmetric")
        upper = sp.triu(A).tocoo()
        return cls(A.shape[0], upper.row, upper.col, upper.data)

    @classmethod
    def zeros(cls, n):
        return cls(n)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n)
        return cls(n, idx, idx, np.ones(n))

    @classmethod
    def diagonal_matrix(cls, d):
        d = np.asarray(d, dtype=float).ravel()
        idx = np.arange(d.size)
        return cls(d.size, idx, idx, d)

    # -- views ------------------------------------------------------------
    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self):
        """Number of stored (upper-triangle) entries."""
        return int(self.values.size)

    def to_scipy(self):
        """Full symmetric CSR matrix (a copy)."""
        return self._csr.copy()

    def to_dense(self):
        return self._csr.toarray()

    def diagonal(self):
        return self._csr.diagonal()

    def dot(self, Y):
        return sym_apply(self, Y)

    __matmul__ = dot

    def scaled(self, alpha):
        return SparseSymMatrix(self.n, self.rows, self.cols, alpha * self.values)

    def frobenius_norm(self):
        off = self.rows != self.cols
        return float(np.sqrt(np.sum(self.values**2) + np.sum(self.values[off] ** 2)))

    def gershgorin_bounds(self):
        return gershgorin_bounds(self._csr)

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, nnz={self.nnz})"


def sym_apply(A, Y):
    """Return ``A @ Y`` for a :class:`SparseSymMatrix` ``A``.

    ``Y`` may be a vector of length ``n`` or an ``n x p`` array.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] != A.n:
        raise DimensionMismatchError(
            f"cannot apply {A.n}x{A.n} matrix to array with {Y.shape[0]} rows"
        )
    return np.asarray(A._csr @ Y)


# -- operators ------------------------------------------------------------

def _as_operator(A, n=None):
    """Wrap matrices, sparse matrices or callables as a LinearOperator."""
    if isinstance(A, SparseSymMatrix):
        return spla.aslinearoperator(A._csr)
    if callable(A) and not hasattr(A, "shape"):
        if n is None:
            raise ValueError("dimension n is required when A is a callable")
        return spla.LinearOperator((n, n), matvec=lambda v: np.asarray(A(v)).ravel(),
                                   dtype=float)
    return spla.aslinearoperator(A)


def _dense_from_operator(op):
    n = op.shape[0]
    M = op.matmat(np.eye(n)) if n else np.zeros((0, 0))
    return 0.5 * (M + M.T)


def gershgorin_bounds(A):
    """Return ``(lower, upper)`` Gershgorin bounds on the spectrum of ``A``."""
    if isinstance(A, SparseSymMatrix):
        A = A._csr
    if sp.issparse(A):
        A = sp.csr_matrix(A)
        d = A.diagonal()
        radius = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    else:
        A = np.asarray(A, dtype=float)
        d = np.diag(A)
        radius = np.sum(np.abs(A), axis=1) - np.abs(d)
    if d.size == 0:
        return 0.0, 0.0
    return float(np.min(d - radius)), float(np.max(d + radius))


def lanczos_min_eig(A, n=None, tol=1e-10, maxiter=None, seed=0, upper_bound=None):
    """Estimate the smallest eigenvalue of a symmetric operator.

    ``A`` can be a dense array, a scipy sparse matrix, a
    :class:`SparseSymMatrix`, a ``LinearOperator`` or a plain callable
    ``v -> A v`` (then ``n`` is required).  ``upper_bound`` must bound the
    spectrum from above; the iteration runs on ``A - upper_bound * I`` so that
    the stopping rule is relative to the spectral spread rather than to
    ``|lambda_min|``, which is typically ~0 for dual certificates.

    Returns ``(lam, v)`` with ``v`` a unit vector and ``lam`` its Rayleigh
    quotient, satisfying ``||A v - lam v|| <= tol * max(1, ||A||_est)``.
    Raises :class:`LanczosConvergenceError` (with the best estimate attached)
    when that residual cannot be reached within ``maxiter`` restarts.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _as_operator(A, n)
    n = op.shape[0]
    if n == 0:
        raise ValueError("empty operator")
    if n <= 2:
        w, V = np.linalg.eigh(_dense_from_operator(op))
        return float(w[0]), V[:, 0]

    if upper_bound is None:
        if isinstance(A, (SparseSymMatrix, np.ndarray)) or sp.issparse(A):
            upper_bound = gershgorin_bounds(A)[1]
        else:
            upper_bound = _power_norm(op, seed)
    shift = float(upper_bound) + 1e-3 * max(1.0, abs(float(upper_bound)))
    shifted = spla.LinearOperator((n, n), matvec=lambda v: op.matvec(v) - shift * v,
                                  dtype=float)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    ncv = min(n, 40)
    try:
        w, V = spla.eigsh(shifted, k=1, which="LM", v0=v0, ncv=ncv, tol=0.1 * tol,
                          maxiter=maxiter or max(1000, 10 * n))
        v = V[:, 0]
    except spla.ArpackNoConvergence as exc:
        v = exc.eigenvectors[:, 0] if exc.eigenvectors.size else v0
        v = v / np.linalg.norm(v)
        lam = float(v @ op.matvec(v))
        raise LanczosConvergenceError(
            "Lanczos did not converge", eigenvalue=lam, eigenvector=v
        ) from exc
    v = v / np.linalg.norm(v)
    Av = op.matvec(v)
    lam = float(v @ Av)
    residual = float(np.linalg.norm(Av - lam * v))
    norm_est = max(abs(lam), abs(shift), abs(float(w[0]) + shift))
    if residual > tol * max(1.0, norm_est):
        raise LanczosConvergenceError(
            f"Lanczos residual {residual:.3e} above tolerance",
            eigenvalue=lam, eigenvector=v, residual=residual,
        )
    return lam, v


def _power_norm(op, seed, iters=30):
    # crude upper bound on ||A||_2, inflated for safety
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = op.matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        est = nw
        v = w / nw
    return 1.5 * est + 1.0


def spectral_norm_estimate(A, seed=0):
    """Estimate ``||A||_2`` for a symmetric matrix (exact for small ``n``)."""
    op = _as_operator(A)
    n = op.shape[0]
    if n == 0:
        return 0.0
    if n <= 64:
        return float(np.max(np.abs(np.linalg.eigvalsh(_dense_from_operator(op)))))
    rng = np.random.default_rng(seed)
    try:
        w = spla.eigsh(op, k=1, which="LM", v0=rng.standard_normal(n), tol=1e-6,
                       return_eigenvectors=False, maxiter=10 * n)
        return float(abs(w[0]))
    except spla.ArpackNoConvergence as exc:
        if exc.eigenvalues.size:
            return float(np.max(np.abs(exc.eigenvalues)))
        return _power_norm(op, seed)


# -- Cholesky-based enclosure ----------------------------------------------

def cholesky_psd_test(A):
    """Return True iff a Cholesky factorization of ``A`` succeeds.

    No jitter is added, so singular PSD matrices fail; callers shift ``A``
    themselves.  Scipy sparse input is tested through an unpivoted sparse
    LDL^T (all pivots positive), which is equivalent in exact arithmetic.
    """
    if sp.issparse(A):
        return _sparse_pd_test(A)
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        return False
    if A.size == 0:
        return True
    try:
        scipy.linalg.cholesky(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return False
    return True


def _sparse_pd_test(A):
    A = sp.csc_matrix(A, dtype=float)
    if A.shape[0] == 0:
        return True
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError:
        # exactly singular
        return False
    # With a symmetric permutation and diagonal pivoting the row and column
    # orders coincide and U's diagonal holds the LDL^T pivots.
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return False
    d = lu.U.diagonal()
    return bool(np.all(np.isfinite(d)) and np.all(d > 0))


def _materialize(A, dense_limit=DENSE_LIMIT):
    """Return a dense array (small n) or scipy sparse matrix for Cholesky."""
    if isinstance(A, SparseSymMatrix):
        return A.to_dense() if A.n <= dense_limit else A.to_scipy()
    if hasattr(A, "to_dense") and hasattr(A, "to_scipy"):
        return A.to_dense() if A.shape[0] <= dense_limit else A.to_scipy()
    if sp.issparse(A):
        return A.toarray() if A.shape[0] <= dense_limit else sp.csc_matrix(A)
    return np.asarray(A, dtype=float)


def _shift(M, sigma):
    if sp.issparse(M):
        return (M - sigma * sp.identity(M.shape[0], format="csc")).tocsc()
    out = M.copy()
    out[np.diag_indices_from(out)] -= sigma
    return out


def bisect_min_eig(A, lo, hi, tol=1e-9, dense_limit=DENSE_LIMIT):
    """Shrink ``[lo, hi]`` around ``lambda_min(A)`` by Cholesky bisection.

    Requires ``A - lo*I`` to pass :func:`cholesky_psd_test` and ``A - hi*I``
    to fail it; returns ``(lo', hi')`` with the same property and
    ``hi' - lo' <= tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lo > hi:
        raise InvalidBracketError(f"empty bracket [{lo}, {hi}]")
    M = _materialize(A, dense_limit)
    if not cholesky_psd_test(_shift(M, lo)):
        raise InvalidBracketError(f"A - ({lo:.6g}) I is not positive definite")
    if cholesky_psd_test(_shift(M, hi)):
        raise InvalidBracketError(f"A - ({hi:.6g}) I is positive definite; hi is too low")
    return _bisect(M, float(lo), float(hi), tol)


def _bisect(M, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cholesky_psd_test(_shift(M, mid)):
            lo = mid
        else:
            hi = mid
    return lo, hi


def min_eig_enclosure(A, tol=1e-9, seed=0, lanczos_tol=1e-10, dense_limit=DENSE_LIMIT):
    """Certified interval around ``lambda_min(A)`` plus an eigenvector estimate.

    Lanczos supplies the Ritz value (an upper bracket after a nudge) and a
    residual that usually allows a tight lower bracket; Gershgorin's bound is
    the fallback lower bracket.  Bisection with Cholesky then shrinks the
    interval to width ``tol``.

    Returns ``(lo, hi, v)``.
    """
    M = _materialize(A, dense_limit)
    g_lo, g_hi = gershgorin_bounds(M)
    try:
        lam, v = lanczos_min_eig(M, tol=lanczos_tol, seed=seed, upper_bound=g_hi)
        Mv = M @ v
        resid = float(np.linalg.norm(Mv - lam * v))
    except LanczosConvergenceError as exc:
        lam, v, resid = exc.eigenvalue, exc.eigenvector, np.inf

    # start well inside tol so near-singular S (the usual case) gets a tight box
    step = max(1e-3 * tol, 64 * np.finfo(float).eps * max(1.0, abs(g_lo), abs(g_hi)))
    hi = lam + 0.5 * step
    while cholesky_psd_test(_shift(M, hi)):
        hi = hi + step
        step *= 2.0

    lo = None
    if np.isfinite(resid):
        gap = max(2.0 * resid, step)
        for _ in range(8):
            trial = hi - gap
            if cholesky_psd_test(_shift(M, trial)):
                lo = trial
                break
            gap *= 8.0
    if lo is None:
        lo = g_lo - 1e-12 * max(1.0, abs(g_lo))
        if not cholesky_psd_test(_shift(M, lo)):
            lo -= max(1.0, abs(lo))
        if not cholesky_psd_test(_shift(M, lo)):
            raise InvalidBracketError("could not find a valid lower bracket")
    lo, hi = _bisect(M, lo, hi, tol)
    return lo, hi, np.asarray(v, dtype=float).ravel()


def jacobi_eigh(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigensolver for small dense symmetric matrices.

    Independent of LAPACK's tridiagonal path; tests use it as an oracle.
    Returns eigenvalues in ascending order and the matching eigenvectors.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n > 64:
        raise ValueError("jacobi_eigh is meant for n <= 64")
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(1.0, np.linalg.norm(A)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]
