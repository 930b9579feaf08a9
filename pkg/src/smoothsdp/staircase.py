"""Rank-incrementing driver ("Riemannian staircase").

Solve at rank ``p`` with RTR and certify with ``lambda_min(S)``.  If the
certificate is too weak, lift ``Y`` to ``[Y | 0]``, step along the
negative-curvature direction ``u e_{p+1}^T`` (``u`` an eigenvector of ``S``
for its smallest eigenvalue), pad any further new columns with small Gaussian
noise, and solve again at the next rank of the schedule.  At ``p = n + 1``
every approximate second-order point is approximately optimal, so the driver
returns there unconditionally.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .certificate import ENCLOSURE_TOL, Certificate, certify
from .exceptions import NoEscapeError, SolverError
from .linalg import lanczos_min_eig
from .rtr import RtrConfig
from .rtr import solve as rtr_solve

logger = logging.getLogger(__name__)

CERTIFIED = "certified"
UNCERTIFIED = "uncertified"
COROLLARY3 = "corollary3"


@dataclass
class StaircaseConfig:
    """Rank schedule and certification settings.

    By default ranks grow geometrically from ``p_start`` to
    ``ceil(sqrt(2 m))`` (clamped to ``n + 1``) in ``n_levels`` steps.  A level
    is certified when the lower end of the ``lambda_min(S)`` enclosure is at
    least ``cert_tol``, which defaults to ``-1e-6 * ||C||_2`` (minus the
    enclosure width, so that ``S = 0`` always certifies).
    """

    p_start: int = 2
    p_max: Optional[int] = None
    p_schedule: Optional[Sequence[int]] = None
    n_levels: int = 5
    cert_tol: Optional[float] = None
    perturb_sigma: float = 1e-5
    seed: int = 0
    rtr: RtrConfig = field(default_factory=RtrConfig)
    enclosure_tol: float = ENCLOSURE_TOL

    def __post_init__(self):
        if self.p_start < 1:
            raise ValueError("p_start must be at least 1")
        if self.n_levels < 1:
            raise ValueError("n_levels must be at least 1")
        if self.perturb_sigma < 0:
            raise ValueError("perturb_sigma must be non-negative")


@dataclass
class LevelReport:
    p: int
    iterations: int
    rtr_status: str
    cost: float
    grad_norm: float
    lambda_min_S: List[float]
    gap_bound: float
    certified: bool
    seconds: float
    escape_step: Optional[float] = None


@dataclass
class SolveReport:
    """Per-level trace of a staircase run, serializable to JSON."""

    n: int
    m: int
    constraint_class: str
    seed: int
    schedule: List[int]
    levels: List[LevelReport] = field(default_factory=list)
    status: str = UNCERTIFIED
    instance: Optional[str] = None
    certificate: Optional[dict] = None
    cut: Optional[dict] = None
    seconds: float = 0.0

    @property
    def final_p(self):
        return self.levels[-1].p if self.levels else None

    def to_dict(self, timings=True):
        out = asdict(self)
        out["final_p"] = self.final_p
        if not timings:
            out.pop("seconds")
            for lvl in out["levels"]:
                lvl.pop("seconds")
        return out


class StaircaseResult(NamedTuple):
    Y: np.ndarray
    certificate: Certificate
    report: SolveReport


def default_schedule(problem, config: StaircaseConfig) -> List[int]:
    n = problem.n
    p_lo = config.p_start
    d = getattr(problem.constraints, "d", 1)
    p_lo = max(p_lo, d)
    if config.p_schedule is not None:
        sched = [int(p) for p in config.p_schedule]
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("p_schedule must be strictly increasing")
        if sched[0] < max(1, d):
            raise ValueError(f"ranks must be at least {max(1, d)}")
        if sched[-1] > n + 1:
            raise ValueError(f"ranks cannot exceed n + 1 = {n + 1}")
        return sched
    p_max = config.p_max
    if p_max is None:
        p_max = math.ceil(math.sqrt(2 * problem.m))
    p_max = min(max(p_max, p_lo), n + 1)
    p_lo = min(p_lo, p_max)
    if config.n_levels == 1 or p_lo == p_max:
        return [p_max] if config.n_levels == 1 else [p_lo]
    raw = np.geomspace(p_lo, p_max, config.n_levels)
    sched = sorted({int(round(x)) for x in raw} | {p_lo, p_max})
    return sched


def lift(Y):
    """``[Y | 0]``: same ``Y Y^T``, hence same cost, ``mu`` and ``S``."""
    Y = np.asarray(Y, dtype=float)
    return np.hstack([Y, np.zeros((Y.shape[0], 1))])


def escape_direction(problem, Y_lifted, certificate: Optional[Certificate] = None, seed=0):
    """Unit tangent ``u e_{p+1}^T`` at a lifted point, ``u`` from ``lambda_min(S)``.

    Its Hessian quadratic form is ``2 u^T S u``, negative whenever ``S`` has a
    negative eigenvalue.  Raises :class:`NoEscapeError` when it does not (up
    to ``1e-12 * ||C||``).
    """
    Y_lifted = np.asarray(Y_lifted, dtype=float)
    if np.any(Y_lifted[:, -1] != 0.0):
        raise ValueError("the last column of a lifted point must be exactly zero")
    if certificate is not None:
        lam = certificate.lambda_min_S[1]
        u = certificate.eigenvector
    else:
        S = problem.dual_matrix(Y_lifted)
        lam, u = lanczos_min_eig(S.as_linear_operator(), tol=1e-10, seed=seed)
    # rounding alone can push lambda_min(S = 0) slightly below zero
    if not lam < -1e-12 * max(1.0, problem.cost_norm()):
        raise NoEscapeError(f"lambda_min(S) = {lam:.3e} is not negative; Y is optimal")
    Ydot = np.zeros_like(Y_lifted)
    Ydot[:, -1] = u / np.linalg.norm(u)
    return Ydot


def _climb(problem, Y, cert, p_next, rng, sigma, seed):
    """Lift ``Y`` to rank ``p_next``, escaping along negative curvature."""
    n, p = Y.shape
    Yl = lift(Y)
    M1 = problem.manifold(p + 1)
    step = None
    try:
        Ydot = escape_direction(problem, Yl, cert, seed=seed)
    except NoEscapeError:
        Ydot = None
    if Ydot is not None:
        f0 = problem.cost(Yl)
        t = 1.0
        for _ in range(50):
            Yt = M1.retract(Yl, t * Ydot)
            if problem.cost(Yt) < f0:
                Yl, step = Yt, t
                break
            t *= 0.5
    if step is None:
        # no decrease found: fall back to a random nudge of the new column
        Yl[:, -1] = sigma * rng.standard_normal(n)
        Yl = M1.project(Yl)
    extra = p_next - (p + 1)
    if extra > 0:
        Yl = np.hstack([Yl, sigma * rng.standard_normal((n, extra))])
        Yl = problem.manifold(p_next).project(Yl)
    return Yl, step


def run(problem, config: Optional[StaircaseConfig] = None, Y0=None,
        instance: Optional[str] = None) -> StaircaseResult:
    """Solve ``problem`` by climbing the rank schedule until certified.

    Returns ``(Y, certificate, report)``; ``report.status`` is one of
    ``"certified"``, ``"corollary3"`` (reached ``p = n + 1``) or
    ``"uncertified"`` (schedule exhausted below ``n + 1``).
    """
    cfg = config or StaircaseConfig()
    if not problem.is_builtin:
        raise SolverError("the staircase needs a built-in constraint class")
    t_start = time.perf_counter()
    schedule = default_schedule(problem, cfg)
    rng = np.random.default_rng(cfg.seed)
    if Y0 is None:
        Y = problem.manifold(schedule[0]).random_point(rng)
    else:
        Y = np.asarray(Y0, dtype=float)
        if Y.shape != (problem.n, schedule[0]):
            raise ValueError(f"Y0 must have shape {(problem.n, schedule[0])}")
    cnorm = problem.cost_norm()
    thresh = cfg.cert_tol if cfg.cert_tol is not None else -(1e-6 * cnorm + cfg.enclosure_tol)

    report = SolveReport(
        n=problem.n, m=problem.m, constraint_class=problem.constraints.name,
        seed=cfg.seed, schedule=list(schedule), instance=instance,
    )
    cert = None
    for idx, p in enumerate(schedule):
        t0 = time.perf_counter()
        res = rtr_solve(problem, Y, cfg.rtr)
        Y = res.Y
        cert = certify(problem, Y, tol=cfg.enclosure_tol, seed=cfg.seed)
        ok = cert.lambda_min_S[0] >= thresh
        level = LevelReport(
            p=p, iterations=res.iterations, rtr_status=res.status, cost=res.cost,
            grad_norm=res.grad_norm, lambda_min_S=list(cert.lambda_min_S),
            gap_bound=cert.gap_bound, certified=bool(ok), seconds=0.0,
        )
        report.levels.append(level)
        logger.info("p=%d: f=%.10g |grad|=%.2e lambda_min(S) in [%.3e, %.3e] (%s)",
                    p, res.cost, res.grad_norm, *cert.lambda_min_S, res.status)
        if ok:
            report.status = CERTIFIED
        elif p > problem.n:
            report.status = COROLLARY3
        elif idx == len(schedule) - 1:
            report.status = UNCERTIFIED
        else:
            Y, level.escape_step = _climb(problem, Y, cert, schedule[idx + 1], rng,
                                          cfg.perturb_sigma, cfg.seed)
            level.seconds = time.perf_counter() - t0
            continue
        level.seconds = time.perf_counter() - t0
        break

    report.certificate = cert.to_dict()
    report.seconds = time.perf_counter() - t_start
    return StaircaseResult(Y, cert, report)
