"""Riemannian trust-region method with a truncated-CG inner solver.

Each outer iteration approximately minimizes the quadratic model

    m(Z) = f(Y) + <grad f(Y), Z> + 1/2 <Z, Hess f(Y)[Z]>,   ||Z|| <= radius

over the tangent space with Steihaug-Toint CG, retracts, and accepts the step
when the actual/predicted decrease ratio is large enough.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import InfeasiblePointError, SolverError
from .geometry import FEASIBILITY_TOL

logger = logging.getLogger(__name__)

CONVERGED = "converged"
ITERATION_CAP = "iteration_cap"
STALLED = "stalled"
TIME_CAP = "time_cap"

# tCG exit reasons
TCG_NEGATIVE_CURVATURE = "negative_curvature"
TCG_BOUNDARY = "boundary"
TCG_RESIDUAL = "residual"
TCG_MAX_INNER = "max_inner"


@dataclass
class RtrConfig:
    """Trust-region settings.

    ``eps_g`` bounds ``||grad f||``; the default ``2e-6`` stops once
    ``||S Y|| <= 1e-6``.  ``radius_init`` and ``radius_max`` default to
    ``sqrt(dim)/8`` and ``sqrt(p R)``.
    """

    eps_g: float = 2e-6
    max_outer: int = 10000
    max_inner: int = 500
    rho_accept: float = 0.1
    radius_init: Optional[float] = None
    radius_max: Optional[float] = None
    kappa: float = 0.1
    theta: float = 0.5
    max_seconds: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not self.eps_g > 0:
            raise ValueError("eps_g must be positive")
        if not 0 < self.rho_accept < 0.25:
            raise ValueError("rho_accept must lie in (0, 1/4)")
        if self.max_outer < 0 or self.max_inner < 1:
            raise ValueError("iteration caps must be positive")


@dataclass
class IterationRecord:
    cost: float
    grad_norm: float
    radius: float
    step_norm: float
    rho: float
    inner_iterations: int
    negative_curvature: bool
    accepted: bool


@dataclass
class RtrTrace:
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def accepted_costs(self):
        return [r.cost for r in self.records if r.accepted]


@dataclass
class RtrResult:
    Y: np.ndarray
    cost: float
    grad_norm: float
    status: str
    iterations: int
    trace: RtrTrace
    last_negative_curvature: bool = False
    seconds: float = 0.0

    @property
    def converged(self):
        return self.status == CONVERGED


def _truncated_cg(problem, Y, mu, grad, grad_norm, radius, cfg):
    """Steihaug-Toint CG on the trust-region model.

    Returns ``(eta, Heta, inner_iterations, reason)``.
    """
    eta = np.zeros_like(Y)
    Heta = np.zeros_like(Y)
    r = grad.copy()
    r_r = grad_norm * grad_norm
    delta = -r
    e_Pe = 0.0
    e_Pd = 0.0
    d_Pd = r_r
    target = grad_norm * min(grad_norm**cfg.theta, cfg.kappa)
    radius2 = radius * radius
    reason = TCG_MAX_INNER
    j = 0
    for j in range(1, cfg.max_inner + 1):
        Hdelta = problem.hessian_apply(Y, delta, mu)
        d_Hd = float(np.vdot(delta, Hdelta))
        alpha = r_r / d_Hd if d_Hd != 0 else np.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd
        if d_Hd <= 0 or e_Pe_new >= radius2:
            tau = (-e_Pd + np.sqrt(max(e_Pd * e_Pd + d_Pd * (radius2 - e_Pe), 0.0))) / d_Pd
            eta = eta + tau * delta
            Heta = Heta + tau * Hdelta
            reason = TCG_NEGATIVE_CURVATURE if d_Hd <= 0 else TCG_BOUNDARY
            break
        eta = eta + alpha * delta
        Heta = Heta + alpha * Hdelta
        e_Pe = e_Pe_new
        r = problem.project_tangent(Y, r + alpha * Hdelta)
        r_r_new = float(np.vdot(r, r))
        if np.sqrt(r_r_new) <= target:
            reason = TCG_RESIDUAL
            break
        beta = r_r_new / r_r
        r_r = r_r_new
        delta = problem.project_tangent(Y, -r + beta * delta)
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = r_r + beta * beta * d_Pd
    return eta, Heta, j, reason


def solve(problem, Y0, config: Optional[RtrConfig] = None) -> RtrResult:
    """Run RTR from ``Y0`` on ``problem`` (a built-in class :class:`SmoothSDP`).

    The returned point satisfies ``f(Y) <= f(Y0)``; if ``status`` is
    ``"converged"`` it also satisfies ``||grad f(Y)|| <= eps_g``.
    """
    cfg = config or RtrConfig()
    t0 = time.perf_counter()
    Y = np.array(Y0, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != problem.n:
        raise InfeasiblePointError(f"initial point has shape {Y.shape}, expected ({problem.n}, p)")
    if not problem.is_builtin:
        raise SolverError("RTR needs a built-in constraint class with a retraction")
    M = problem.manifold(Y.shape[1])
    resid = M.feasibility_residual(Y)
    if not resid <= 1e-8:
        raise InfeasiblePointError(f"initial point is infeasible (residual {resid:.3e})",
                                   residual=resid)
    if resid > FEASIBILITY_TOL:
        Y = M.project(Y)

    radius_max = cfg.radius_max or float(np.sqrt(Y.shape[1] * problem.R))
    radius = cfg.radius_init or min(max(np.sqrt(M.dimension()), 1.0) / 8.0, radius_max)

    ev = problem.evaluate(Y)
    if not (np.isfinite(ev.cost) and np.all(np.isfinite(ev.grad))):
        raise SolverError("non-finite cost or gradient at the initial point")

    trace = RtrTrace()
    status = ITERATION_CAP
    last_negcurv = False
    k = 0
    for k in range(cfg.max_outer + 1):
        gnorm = ev.grad_norm
        if gnorm <= cfg.eps_g:
            status = CONVERGED
            break
        if k == cfg.max_outer:
            break
        if cfg.max_seconds is not None and time.perf_counter() - t0 > cfg.max_seconds:
            status = TIME_CAP
            break

        eta, Heta, inner, reason = _truncated_cg(problem, Y, ev.mu, ev.grad, gnorm, radius, cfg)
        last_negcurv = reason == TCG_NEGATIVE_CURVATURE
        Yp = M.retract(Y, eta)
        evp = problem.evaluate(Yp)
        if not (np.isfinite(evp.cost) and np.all(np.isfinite(evp.grad))):
            raise SolverError(f"non-finite cost or gradient at iteration {k}")

        # f(Y) - f(Yp) = <C(Y - Yp), Y + Yp>, accurate when the step is small
        actual = float(np.vdot(ev.CY - evp.CY, Y + Yp))
        pred = -(float(np.vdot(ev.grad, eta)) + 0.5 * float(np.vdot(eta, Heta)))
        rho = actual / pred if pred > 0 else -np.inf
        step_norm = float(np.linalg.norm(eta))
        on_boundary = reason in (TCG_NEGATIVE_CURVATURE, TCG_BOUNDARY)

        if rho < 0.25:
            radius *= 0.25
        elif rho > 0.75 and on_boundary:
            radius = min(2.0 * radius, radius_max)

        accepted = bool(rho >= cfg.rho_accept and actual > 0)
        if accepted:
            Y, ev = Yp, evp
        trace.records.append(IterationRecord(
            cost=ev.cost, grad_norm=ev.grad_norm, radius=radius, step_norm=step_norm,
            rho=float(rho), inner_iterations=inner, negative_curvature=last_negcurv,
            accepted=accepted,
        ))
        if radius < 1e-13 * radius_max:
            status = STALLED
            logger.debug("trust region collapsed at iteration %d (grad %.3e)", k, ev.grad_norm)
            break

    return RtrResult(
        Y=Y, cost=ev.cost, grad_norm=ev.grad_norm, status=status, iterations=len(trace),
        trace=trace, last_negative_curvature=last_negcurv,
        seconds=time.perf_counter() - t0,
    )
