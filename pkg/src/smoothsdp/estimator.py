"""scikit-learn style estimators wrapping the staircase solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_cost_matrix, check_seed
from .certificate import certify
from .maxcut import Graph, build_problem, cut_bound, gw_round
from .model import FixedDiagonal, FixedDiagonalBlocks, FixedTrace, SmoothSDP
from .rtr import RtrConfig
from .staircase import CERTIFIED, StaircaseConfig, run

_CLASSES = ("trace", "diag", "blockdiag")


def _make_constraints(name, n, block_size):
    if name == "trace":
        return FixedTrace()
    if name == "diag":
        return FixedDiagonal()
    if name == "blockdiag":
        if block_size is None or block_size < 1 or n % block_size:
            raise ValueError(f"block_size must divide n = {n}, got {block_size!r}")
        return FixedDiagonalBlocks(block_size, n // block_size)
    raise ValueError(f"constraint must be one of {_CLASSES}, got {name!r}")


class _StaircaseParams:
    def _staircase_config(self):
        seed = check_seed(self.random_state)
        rtr = RtrConfig(eps_g=self.tol_grad, max_inner=self.max_inner, seed=seed)
        return StaircaseConfig(
            p_start=self.p_start, p_max=self.p_max, n_levels=self.n_levels,
            cert_tol=self.cert_tol, perturb_sigma=self.perturb_sigma, seed=seed, rtr=rtr,
        )

    def _store(self, problem, result):
        self.Y_ = result.Y
        self.certificate_ = result.certificate
        self.report_ = result.report
        self.status_ = result.report.status
        self.objective_ = result.certificate.cost
        self.n_features_in_ = problem.n


class BurerMonteiroSDP(_StaircaseParams, BaseEstimator):
    """Low-rank solver for ``min <C, X>`` under trace, diagonal or block constraints.

    ``fit(C)`` runs the rank staircase on the symmetric cost ``C`` (dense or
    scipy sparse) and stores the factor ``Y_`` with ``X = Y_ Y_^T``, the
    optimality certificate and the per-level report.  ``transform`` returns
    ``Y_``: rows are unit-norm embeddings of the ``n`` variables for the
    diagonal class.

    Parameters
    ----------
    constraint : {"diag", "trace", "blockdiag"}
    block_size : int, optional
        Block order ``d`` for ``"blockdiag"``; must divide ``n``.
    p_start, p_max, n_levels : rank schedule (``p_max`` defaults to
        ``ceil(sqrt(2 m))``).
    tol_grad : float
        Riemannian gradient tolerance for each RTR run.
    cert_tol : float, optional
        Lower threshold on ``lambda_min(S)`` to accept a level.
    random_state : int
    """

    def __init__(self, constraint="diag", block_size=None, p_start=2, p_max=None,
                 n_levels=5, tol_grad=2e-6, max_inner=500, perturb_sigma=1e-5,
                 cert_tol=None, random_state=0):
        self.constraint = constraint
        self.block_size = block_size
        self.p_start = p_start
        self.p_max = p_max
        self.n_levels = n_levels
        self.tol_grad = tol_grad
        self.max_inner = max_inner
        self.perturb_sigma = perturb_sigma
        self.cert_tol = cert_tol
        self.random_state = random_state

    def fit(self, C, y=None):
        C = check_cost_matrix(C)
        problem = SmoothSDP(C, _make_constraints(self.constraint, C.n, self.block_size))
        self.problem_ = problem
        self._store(problem, run(problem, self._staircase_config()))
        return self

    def transform(self, C=None):
        """Return the fitted factor; ``C``, if given, must match the fitted size."""
        check_is_fitted(self, "Y_")
        if C is not None and check_cost_matrix(C).n != self.n_features_in_:
            raise ValueError(f"expected a {self.n_features_in_} x {self.n_features_in_} cost matrix")
        return self.Y_

    def fit_transform(self, C, y=None, **fit_params):
        return self.fit(C).Y_

    @property
    def certified_(self):
        check_is_fitted(self, "status_")
        return self.status_ == CERTIFIED

    def score(self, C=None, y=None):
        """``-(gap_bound / 2)``: minus the certified bound on ``f(Y) - f*``."""
        check_is_fitted(self, "certificate_")
        return -0.5 * self.certificate_.gap_bound


class MaxCutSDP(_StaircaseParams, ClusterMixin, BaseEstimator):
    """Max-Cut by the SDP relaxation plus random-hyperplane rounding.

    ``fit(W)`` takes a symmetric weighted adjacency matrix (or a
    :class:`~smoothsdp.maxcut.Graph`) and sets ``labels_`` (0/1 sides),
    ``assignment_`` (+-1, vertex 0 on +1), ``cut_value_``, ``cut_bound_``
    (certified upper bound on the maximum cut) and ``sdp_value_``.
    """

    def __init__(self, p_start=2, p_max=None, n_levels=5, tol_grad=2e-6, max_inner=500,
                 perturb_sigma=1e-5, cert_tol=None, n_samples=1000, random_state=0):
        self.p_start = p_start
        self.p_max = p_max
        self.n_levels = n_levels
        self.tol_grad = tol_grad
        self.max_inner = max_inner
        self.perturb_sigma = perturb_sigma
        self.cert_tol = cert_tol
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, Graph):
            graph = X
        else:
            graph = _graph_from_sparse(check_cost_matrix(X))
        problem = build_problem(graph)
        self.graph_ = graph
        self.problem_ = problem
        result = run(problem, self._staircase_config())
        self._store(problem, result)
        cut = gw_round(problem, result.Y, samples=self.n_samples,
                       seed=check_seed(self.random_state), cert=result.certificate)
        self.assignment_ = cut.assignment
        self.labels_ = (cut.assignment < 0).astype(int)
        self.cut_value_ = cut.cut_value
        self.cut_bound_ = cut.certified_upper_bound
        self.sdp_value_ = problem.sdp_cut_value(result.Y)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "labels_")
        return self.labels_


def _graph_from_sparse(W):
    mask = W.rows != W.cols
    if not np.all(W.values[~mask] == 0):
        raise ValueError("self-loops are not allowed")
    return Graph(W.n, W.rows[mask], W.cols[mask], W.values[mask])


def refit_certificate(estimator, seed=0):
    """Recompute the certificate of a fitted estimator (a reproducibility check)."""
    check_is_fitted(estimator, "Y_")
    cert = certify(estimator.problem_, estimator.Y_, seed=seed)
    if isinstance(estimator, MaxCutSDP):
        return cert, cut_bound(estimator.problem_, estimator.Y_, cert)
    return cert, None
