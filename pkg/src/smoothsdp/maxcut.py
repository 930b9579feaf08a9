"""Max-Cut: Gset parsing, the SDP relaxation, cut bounds and rounding.

The relaxation ``max 1/4 <L, X>  s.t. diag(X) = 1, X psd`` is solved in
minimization form with cost ``C = -L/4``, so ``cut(X) = -f(Y)`` exactly.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import GsetParseError
from .linalg import SparseSymMatrix
from .model import FixedDiagonal, SmoothSDP


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph; edges ``(i, j, w)`` with ``0 <= i < j < n``."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_edges(cls, n, edges, warn_duplicates=True):
        edges = list(edges)
        if edges:
            i, j, w = (np.asarray(a) for a in zip(*edges))
        else:
            i = j = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        return cls.from_arrays(n, i, j, w, warn_duplicates=warn_duplicates)

    @classmethod
    def from_arrays(cls, n, i, j, w, warn_duplicates=True):
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        w = np.asarray(w, dtype=float)
        if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(i == j):
            raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        if uniq.size < key.size:
            if warn_duplicates:
                warnings.warn(f"{key.size - uniq.size} duplicate edge(s) summed", stacklevel=3)
        wsum = np.zeros(uniq.size)
        np.add.at(wsum, inv, w)
        return cls(int(n), uniq // n, uniq % n, wsum)

    @classmethod
    def from_adjacency(cls, W):
        W = np.asarray(W, dtype=float)
        if W.shape[0] != W.shape[1] or not np.allclose(W, W.T):
            raise ValueError("adjacency matrix must be square and symmetric")
        if np.any(np.diag(W) != 0):
            raise ValueError("self-loops are not allowed")
        i, j = np.nonzero(np.triu(W, 1))
        return cls(W.shape[0], i, j, W[i, j])

    @property
    def num_edges(self):
        return int(self.weights.size)

    def adjacency(self):
        return SparseSymMatrix(self.n, self.rows, self.cols, self.weights)

    def laplacian(self):
        deg = np.zeros(self.n)
        np.add.at(deg, self.rows, self.weights)
        np.add.at(deg, self.cols, self.weights)
        idx = np.arange(self.n)
        return SparseSymMatrix(
            self.n,
            np.concatenate([idx, self.rows]),
            np.concatenate([idx, self.cols]),
            np.concatenate([deg, -self.weights]),
        )

    def cut_value(self, x):
        """Total weight of edges joining opposite signs of ``x``."""
        x = np.asarray(x)
        return float(np.sum(self.weights * (x[self.rows] != x[self.cols])))

    def cut_values(self, X):
        """Cut values for each column of a ``n x k`` sign matrix."""
        differ = X[self.rows] != X[self.cols]
        return self.weights @ differ

    def to_gset(self):
        lines = [f"{self.n} {self.num_edges}"]
        for i, j, w in zip(self.rows, self.cols, self.weights):
            wv = int(w) if float(w).is_integer() else repr(float(w))
            lines.append(f"{i + 1} {j + 1} {wv}")
        return "\n".join(lines) + "\n"


def parse_gset(text) -> Graph:
    """Parse the Gset / rudy format: ``n m`` then ``m`` lines ``i j w`` (1-based)."""
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines())]
    lines = [(k, toks) for k, toks in lines if toks and not toks[0].startswith(("#", "%"))]
    if not lines:
        raise GsetParseError("empty input")
    k0, head = lines[0]
    if len(head) != 2:
        raise GsetParseError("header must be 'n m'", k0)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GsetParseError("non-numeric token in header", k0) from None
    if n < 1 or m < 0:
        raise GsetParseError("invalid header values", k0)
    body = lines[1:]
    if len(body) != m:
        raise GsetParseError(f"edge count mismatch: header says {m}, found {len(body)}")
    rows = np.empty(m, dtype=np.int64)
    cols = np.empty(m, dtype=np.int64)
    wts = np.empty(m)
    for t, (k, toks) in enumerate(body):
        if len(toks) != 3:
            raise GsetParseError("expected 'i j w'", k)
        try:
            i, j, w = int(toks[0]), int(toks[1]), float(toks[2])
        except ValueError:
            raise GsetParseError("non-numeric token", k) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise GsetParseError("endpoint out of range", k)
        if i == j:
            raise GsetParseError("self-loop", k)
        if not np.isfinite(w):
            raise GsetParseError("non-finite weight", k)
        rows[t], cols[t], wts[t] = i - 1, j - 1, w
    return Graph.from_arrays(n, rows, cols, wts)


def read_gset(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_gset(fh.read())


class MaxCutProblem(SmoothSDP):
    """The Max-Cut relaxation as a :class:`SmoothSDP` with cost ``-L/4``.

    ``sdp_cut_value(Y) = 1/4 <L, Y Y^T> = -cost(Y)``.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        self.laplacian = graph.laplacian()
        super().__init__(self.laplacian.scaled(-0.25), FixedDiagonal())

    def sdp_cut_value(self, Y):
        Y = np.asarray(Y, dtype=float)
        return 0.25 * float(np.vdot(self.laplacian @ Y, Y))


def build_problem(graph: Graph) -> MaxCutProblem:
    return MaxCutProblem(graph)


def cut_bound(problem: MaxCutProblem, Y, cert) -> float:
    """Certified upper bound on the maximum cut.

    With cost ``-L/4`` and ``R = n``, ``f* >= f(Y) + n * min(0, lambda_min(S))``,
    hence ``maxcut <= 1/4 <L, Y Y^T> - n * min(0, lambda_min(S))``.  (With
    ``S`` computed from the adjacency matrix instead, the same bound reads
    ``... - n/4 * lambda_min``.)
    """
    lo = cert.lambda_min_S[0]
    return problem.sdp_cut_value(Y) - problem.n * min(0.0, lo)


@dataclass(frozen=True)
class CutResult:
    assignment: np.ndarray
    cut_value: float
    certified_upper_bound: Optional[float] = None


def _canonical(X):
    # flip columns so the first vertex is on the +1 side
    return X * np.where(X[0] < 0, -1, 1)


def gw_round(problem: MaxCutProblem, Y, samples=1000, seed=0, cert=None, chunk=256) -> CutResult:
    """Random-hyperplane rounding: best of ``samples`` cuts ``sign(Y g)``.

    ``sign(0)`` is taken as ``+1``.  Ties in cut value are broken by the
    lexicographically smallest assignment (after fixing vertex 0 to ``+1``),
    so the result is deterministic for a given seed.
    """
    Y = np.asarray(Y, dtype=float)
    g = problem.graph
    rng = np.random.default_rng(seed)
    best_val, best_x = -np.inf, None
    remaining = int(samples)
    if remaining < 1:
        raise ValueError("samples must be positive")
    while remaining > 0:
        k = min(chunk, remaining)
        remaining -= k
        G = rng.standard_normal((Y.shape[1], k))
        X = np.where(Y @ G >= 0, 1, -1).astype(np.int8)
        X = _canonical(X)
        vals = g.cut_values(X)
        top = vals.max()
        if top < best_val:
            continue
        cands = [X[:, c] for c in np.flatnonzero(vals == top)]
        if top == best_val:
            cands.append(best_x)
        best_x = min(cands, key=lambda v: tuple(v))
        best_val = top
    bound = cut_bound(problem, Y, cert) if cert is not None else None
    return CutResult(best_x.astype(int), float(best_val), bound)


def brute_force_maxcut(graph: Graph, chunk_bits=16):
    """Exact max cut by enumeration of ``2^(n-1)`` assignments (``n <= 24``)."""
    n = graph.n
    if n > 24:
        raise ValueError(f"brute force is limited to n <= 24 (got {n})")
    if n == 1:
        return 0.0, np.ones(1, dtype=int)
    free = n - 1
    # vertex 0 fixed to +1; bits of the pattern give vertices 1..n-1
    low_bits = min(free, chunk_bits)
    low = np.arange(1 << low_bits, dtype=np.int64)
    low_signs = ((low[None, :] >> np.arange(low_bits)[:, None]) & 1).astype(np.int8)
    best_val, best_pat = -np.inf, 0
    for high in range(1 << (free - low_bits)):
        high_signs = np.array([(high >> b) & 1 for b in range(free - low_bits)], dtype=np.int8)
        S = np.empty((n, low.size), dtype=np.int8)
        S[0] = 0
        S[1:1 + low_bits] = low_signs
        S[1 + low_bits:] = high_signs[:, None]
        vals = graph.cut_values(S)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_pat = (high << low_bits) | int(low[k])
    x = np.ones(n, dtype=int)
    for b in range(free):
        if (best_pat >> b) & 1:
            x[b + 1] = -1
    return best_val, x


def _exhaustive_small(graph: Graph):
    """Plain itertools enumeration; a second oracle for tests on tiny graphs."""
    best = -np.inf
    for signs in itertools.product((1, -1), repeat=graph.n - 1):
        x = np.array((1,) + signs)
        best = max(best, graph.cut_value(x))
    return best
