"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.utils.validation import check_array

from .exceptions import DimensionMismatchError
from .linalg import SparseSymMatrix


def check_cost_matrix(C, atol=1e-10) -> SparseSymMatrix:
    """Coerce ``C`` to a :class:`SparseSymMatrix`, checking shape and symmetry."""
    if isinstance(C, SparseSymMatrix):
        return C
    if sp.issparse(C):
        C = check_array(C, accept_sparse=("csr", "csc", "coo"), dtype=np.float64,
                        ensure_2d=True, ensure_min_samples=1, ensure_min_features=1)
        if C.shape[0] != C.shape[1]:
            raise DimensionMismatchError(f"cost matrix must be square, got {C.shape}")
        return SparseSymMatrix.from_scipy(C, atol=atol)
    C = check_array(C, dtype=np.float64, ensure_2d=True,
                    ensure_min_samples=1, ensure_min_features=1)
    if C.shape[0] != C.shape[1]:
        raise DimensionMismatchError(f"cost matrix must be square, got {C.shape}")
    return SparseSymMatrix.from_dense(C, atol=atol)


def check_factor(Y, n=None):
    Y = check_array(Y, dtype=np.float64, ensure_2d=False)
    if Y.ndim == 1:
        Y = Y[:, None]
    if n is not None and Y.shape[0] != n:
        raise DimensionMismatchError(f"factor must have {n} rows, got {Y.shape[0]}")
    return Y


def check_seed(seed):
    if seed is None:
        return 0
    if isinstance(seed, (int, np.integer)) and seed >= 0:
        return int(seed)
    raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
