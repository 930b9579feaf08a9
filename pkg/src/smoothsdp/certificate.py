"""A posteriori optimality certificates for factored smooth SDPs.

For any feasible ``Y`` with ``||grad f(Y)|| <= eps_g`` and
``S(Y) >= -(eps_H / 2) I``,

    0 <= 2 (f(Y) - f*) <= eps_H R + eps_g sqrt(R),

where ``R`` is the largest trace over the feasible set.  When ``I_n`` is in
the range of ``A*`` (constant trace with a positive definite feasible point,
true for all built-in classes) the gradient term drops.  Since ``S`` depends
on ``Y`` only through ``Y Y^T``, the same certificate is valid for the lifted
point ``[Y | 0]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .linalg import min_eig_enclosure

ENCLOSURE_TOL = 1e-9


@dataclass(frozen=True)
class Certificate:
    """Dual information and gap bounds at one feasible point.

    ``gap_bound`` bounds ``2 (f(Y) - f*)``; it equals ``simplified_gap_bound``
    when ``simplified`` is true and ``general_gap_bound`` otherwise.
    ``lower_bound = cost - gap_bound / 2`` is a certified lower bound on
    ``f*``.  ``dual_value = <b, mu>`` is a valid lower bound only when ``S``
    is positive semidefinite (see :func:`dual_feasibility`).
    """

    mu: np.ndarray = field(repr=False)
    lambda_min_S: Tuple[float, float]
    grad_norm: float
    cost: float
    R: float
    eps_H: float
    gap_bound: float
    general_gap_bound: float
    simplified_gap_bound: Optional[float]
    simplified: bool
    dual_value: float
    eigenvector: np.ndarray = field(repr=False, compare=False)
    hessian_rayleigh: Optional[float] = None

    @property
    def lower_bound(self):
        return self.cost - 0.5 * self.gap_bound

    @property
    def lambda_min(self):
        """Midpoint of the enclosure."""
        lo, hi = self.lambda_min_S
        return 0.5 * (lo + hi)

    def to_dict(self):
        lo, hi = self.lambda_min_S
        return {
            "lambda_min_S": [lo, hi],
            "grad_norm": self.grad_norm,
            "cost": self.cost,
            "R": self.R,
            "eps_H": self.eps_H,
            "gap_bound": self.gap_bound,
            "general_gap_bound": self.general_gap_bound,
            "simplified_gap_bound": self.simplified_gap_bound,
            "simplified": self.simplified,
            "dual_value": self.dual_value,
            "lower_bound": self.lower_bound,
            "hessian_rayleigh": self.hessian_rayleigh,
        }


def certify(problem, Y, tol=ENCLOSURE_TOL, seed=0, feasibility_tol=1e-8) -> Certificate:
    """Certificate at ``Y``: ``mu``, an enclosure of ``lambda_min(S)``, gap bounds."""
    Y = problem.check_feasible(Y, tol=feasibility_tol)
    ev = problem.evaluate(Y)
    S = problem.dual_matrix(mu=ev.mu)
    if problem.C.nnz == 0 and not np.any(ev.mu):
        # S = 0 exactly: nothing to enclose
        lo = hi = 0.0
        v = np.zeros(problem.n)
        v[0] = 1.0
    else:
        lo, hi, v = min_eig_enclosure(S, tol=tol, seed=seed)
    R = problem.R
    eps_g = ev.grad_norm
    eps_H = 2.0 * max(0.0, -lo)
    general = eps_H * R + eps_g * np.sqrt(R)
    simplified = bool(problem.constraints.trace_constant)
    simple_bound = eps_H * R if simplified else None
    return Certificate(
        mu=ev.mu,
        lambda_min_S=(float(lo), float(hi)),
        grad_norm=float(eps_g),
        cost=ev.cost,
        R=R,
        eps_H=eps_H,
        gap_bound=float(simple_bound if simplified else general),
        general_gap_bound=float(general),
        simplified_gap_bound=None if simple_bound is None else float(simple_bound),
        simplified=simplified,
        dual_value=problem.constraints.dual_objective(ev.mu),
        eigenvector=v,
    )


def escape_rayleigh(problem, Y, u, z=None):
    """Hessian Rayleigh quotient along ``u z^T`` at the rank-deficient ``Y``.

    ``z`` must be a unit vector with ``Y z = 0``; when omitted, ``Y`` is
    lifted to ``[Y | 0]`` and ``z = e_{p+1}``.  For such directions the value
    equals ``2 u^T S u / ||u||^2``.
    """
    Y = np.asarray(Y, dtype=float)
    if z is None:
        Y = np.hstack([Y, np.zeros((Y.shape[0], 1))])
        z = np.zeros(Y.shape[1])
        z[-1] = 1.0
    Ydot = np.outer(u, z)
    H = problem.hessian_apply(Y, Ydot)
    return float(np.vdot(Ydot, H) / np.vdot(Ydot, Ydot))


def certify_lifted(problem, Y, tol=ENCLOSURE_TOL, seed=0) -> Certificate:
    """Certificate for ``Y`` read through the lifted point ``[Y | 0]``.

    ``S([Y | 0]) = S(Y)`` so the bounds coincide with :func:`certify`.  In
    addition, the Hessian Rayleigh quotient at the rank-deficient point along
    ``u z^T`` (``u`` the eigenvector estimate of ``lambda_min(S)``) is
    recorded and checked against ``2 u^T S u``.  For ``p > n``, ``Y`` is
    already rank deficient and is not lifted.
    """
    Y = np.asarray(Y, dtype=float)
    cert = certify(problem, Y, tol=tol, seed=seed)
    n, p = Y.shape
    if cert.lambda_min_S[1] >= 0:
        # no certified negative curvature to probe (e.g. S = 0)
        return cert
    u = cert.eigenvector
    if p > n:
        _, _, Vt = np.linalg.svd(Y)
        rq = escape_rayleigh(problem, Y, u, z=Vt[-1])
    else:
        rq = escape_rayleigh(problem, Y, u)
    S = problem.dual_matrix(mu=cert.mu)
    expected = 2.0 * float(u @ S.matvec(u)) / float(u @ u)
    scale = max(1.0, problem.cost_norm())
    if abs(rq - expected) > 1e-8 * scale:
        raise RuntimeError(
            f"Hessian Rayleigh quotient {rq:.6e} disagrees with 2 u^T S u = {expected:.6e}"
        )
    return Certificate(**{**cert.__dict__, "hessian_rayleigh": rq})


def dual_feasibility(problem, cert: Certificate, scale=None, resolution=ENCLOSURE_TOL) -> bool:
    """True iff ``mu`` is dual feasible, i.e. ``S(Y)`` is PSD up to rounding.

    The enclosure of ``lambda_min(S)`` has width ``resolution``, so a PSD
    ``S`` with a zero eigenvalue may report ``lo`` slightly below zero; that
    width is allowed on top of ``1e-12 * scale``.  When true,
    ``cert.dual_value`` is a lower bound on ``f*`` up to the same slack.
    """
    if scale is None:
        scale = max(1.0, problem.cost_norm())
    return bool(cert.lambda_min_S[0] >= -(1e-12 * scale + resolution))
