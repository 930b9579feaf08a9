import numpy as np
import pytest

from smoothsdp.linalg import SparseSymMatrix
from smoothsdp.maxcut import Graph
from smoothsdp.model import FixedDiagonal, FixedDiagonalBlocks, FixedTrace, SmoothSDP


def gaussian_cost(n, rng):
    A = rng.standard_normal((n, n))
    return (A + A.T) / np.sqrt(2)


def random_problem(kind, n, rng, d=2):
    C = gaussian_cost(n, rng)
    if kind == "trace":
        cons = FixedTrace()
    elif kind == "diag":
        cons = FixedDiagonal()
    else:
        cons = FixedDiagonalBlocks(d, n // d)
    return SmoothSDP(C, cons)


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


def complete(n):
    return Graph.from_edges(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)])


def random_graph(n, prob, rng, weights=None):
    i, j = np.triu_indices(n, 1)
    keep = rng.random(i.size) < prob
    w = np.ones(keep.sum()) if weights is None else weights(rng, keep.sum())
    return Graph.from_arrays(n, i[keep], j[keep], w)


def normal_space_projection(problem, Y, Z):
    """Tangent projection by least squares against the normal vectors A_i Y."""
    n, p = Y.shape
    cons = problem.constraints
    if isinstance(cons, FixedTrace):
        N = [Y]
    elif isinstance(cons, FixedDiagonal):
        N = []
        for i in range(n):
            E = np.zeros_like(Y)
            E[i] = Y[i]
            N.append(E)
    else:
        d = cons.d
        N = []
        for b in range(cons.q):
            for r in range(d):
                for s in range(r, d):
                    Ai = np.zeros((n, n))
                    Ai[b * d + r, b * d + s] = Ai[b * d + s, b * d + r] = 1.0
                    N.append(Ai @ Y)
    B = np.stack([v.ravel() for v in N], axis=1)
    coef, *_ = np.linalg.lstsq(B, Z.ravel(), rcond=None)
    return Z - (B @ coef).reshape(n, p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def k3():
    return complete(3)


@pytest.fixture
def path3():
    return SparseSymMatrix(3, [0, 1], [1, 2], [1.0, 1.0])
