"""Low-rank (Burer-Monteiro) solvers for smooth semidefinite programs.

Solves ``min <C, X>`` subject to trace, diagonal or block-diagonal equality
constraints and ``X psd`` by optimizing over factors ``X = Y Y^T`` with a
Riemannian trust-region method, and certifies the result through the
smallest eigenvalue of the dual matrix ``S = C - A*(mu)``.
"""
from .certificate import Certificate, certify, certify_lifted, dual_feasibility
from .estimator import BurerMonteiroSDP, MaxCutSDP
from .exceptions import (
    ConstraintQualificationError,
    DegenerateRetractionError,
    DimensionMismatchError,
    GsetParseError,
    InfeasiblePointError,
    InvalidBracketError,
    LanczosConvergenceError,
    NoEscapeError,
    ProblemFileError,
    SmoothSDPError,
    SolverError,
)
from .geometry import ProductOfSpheres, ProductOfStiefel, Sphere
from .linalg import SparseSymMatrix, min_eig_enclosure, sym_apply
from .maxcut import CutResult, Graph, brute_force_maxcut, build_problem, cut_bound, gw_round, parse_gset
from .model import FixedDiagonal, FixedDiagonalBlocks, FixedTrace, GeneralLinear, SmoothSDP
from .rtr import RtrConfig, RtrResult
from .rtr import solve as rtr_solve
from .staircase import SolveReport, StaircaseConfig, StaircaseResult
from .staircase import run as staircase

__version__ = "0.1.0"

__all__ = [
    "BurerMonteiroSDP", "Certificate", "ConstraintQualificationError", "CutResult",
    "DegenerateRetractionError", "DimensionMismatchError", "FixedDiagonal",
    "FixedDiagonalBlocks", "FixedTrace", "GeneralLinear", "Graph", "GsetParseError",
    "InfeasiblePointError", "InvalidBracketError", "LanczosConvergenceError", "MaxCutSDP",
    "NoEscapeError", "ProblemFileError", "ProductOfSpheres", "ProductOfStiefel",
    "RtrConfig", "RtrResult", "SmoothSDP", "SmoothSDPError", "SolveReport", "SolverError",
    "SparseSymMatrix", "Sphere", "StaircaseConfig", "StaircaseResult", "brute_force_maxcut",
    "build_problem", "certify", "certify_lifted", "cut_bound", "dual_feasibility",
    "gw_round", "min_eig_enclosure", "parse_gset", "rtr_solve", "staircase", "sym_apply",
]
