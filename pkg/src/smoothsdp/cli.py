"""Command-line interface: ``smoothsdp {maxcut,solve,certify,bench}``.

Exit codes: 0 certified, 2 uncertified, 1 input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .certificate import certify, dual_feasibility
from .exceptions import GsetParseError, InfeasiblePointError, ProblemFileError, SmoothSDPError
from .linalg import SparseSymMatrix
from .maxcut import build_problem, cut_bound, gw_round, read_gset
from .model import FixedDiagonal, FixedDiagonalBlocks, FixedTrace, SmoothSDP
from .rtr import RtrConfig
from .staircase import CERTIFIED, COROLLARY3, StaircaseConfig, run

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNCERTIFIED = 2

logger = logging.getLogger("smoothsdp")


# -- generic problem files -------------------------------------------------
def parse_problem(text) -> SmoothSDP:
    """Parse a problem file.

    The first non-comment line names the constraint class, ``trace n``,
    ``diag n`` or ``blockdiag d q`` (then ``n = d q``).  Each further line is a
    1-based triple ``i j v`` giving ``C_ij = C_ji = v``.  Lines starting with
    ``#`` are ignored; repeated ``(i, j)`` pairs, in either order, are summed.
    """
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines())]
    lines = [(k, t) for k, t in lines if t and not t[0].startswith("#")]
    if not lines:
        raise ProblemFileError("empty problem file")
    k0, head = lines[0]
    kind = head[0].lower()
    try:
        dims = [int(t) for t in head[1:]]
    except ValueError:
        raise ProblemFileError("non-numeric dimension in header", k0) from None
    if kind in ("trace", "diag"):
        if len(dims) != 1:
            raise ProblemFileError(f"header must be '{kind} n'", k0)
        n = dims[0]
        constraints = FixedTrace() if kind == "trace" else FixedDiagonal()
    elif kind == "blockdiag":
        if len(dims) != 2:
            raise ProblemFileError("header must be 'blockdiag d q'", k0)
        d, q = dims
        if d < 1 or q < 1:
            raise ProblemFileError("block sizes must be positive", k0)
        n = d * q
        constraints = FixedDiagonalBlocks(d, q)
    else:
        raise ProblemFileError(f"unknown constraint class {head[0]!r}", k0)
    if n < 1:
        raise ProblemFileError("dimension must be positive", k0)

    body = lines[1:]
    rows = np.empty(len(body), dtype=np.int64)
    cols = np.empty(len(body), dtype=np.int64)
    vals = np.empty(len(body))
    for t, (k, toks) in enumerate(body):
        if len(toks) != 3:
            raise ProblemFileError("expected 'i j v'", k)
        try:
            i, j, v = int(toks[0]), int(toks[1]), float(toks[2])
        except ValueError:
            raise ProblemFileError("non-numeric token", k) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ProblemFileError(f"index out of range for n = {n}", k)
        if not math.isfinite(v):
            raise ProblemFileError("non-finite value", k)
        rows[t], cols[t], vals[t] = i - 1, j - 1, v
    return SmoothSDP(SparseSymMatrix(n, rows, cols, vals), constraints)


def read_problem(path) -> SmoothSDP:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def read_factor(path, n):
    try:
        Y = np.loadtxt(path, ndmin=2)
    except ValueError as exc:
        raise ProblemFileError(f"cannot read Y: {exc}") from None
    if Y.shape[0] != n:
        if Y.shape[1] == n and Y.shape[0] == 1:
            Y = Y.T
        else:
            raise ProblemFileError(f"Y has {Y.shape[0]} rows, expected {n}")
    return Y


def _violation_message(problem, exc: InfeasiblePointError):
    c = problem.constraints
    if exc.index is None:
        return str(exc)
    if isinstance(c, FixedDiagonal):
        where = f"row {exc.index + 1}"
    elif isinstance(c, FixedDiagonalBlocks):
        a = exc.index * c.d
        where = f"block {exc.index + 1} (rows {a + 1}-{a + c.d})"
    else:
        where = "the trace constraint"
    return f"infeasible Y: {where} violates its constraint by {exc.residual:.3e} (tolerance 1e-8)"


# -- reports ---------------------------------------------------------------
def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def _config(args):
    rtr = RtrConfig(eps_g=args.tol_grad, seed=args.seed)
    return StaircaseConfig(p_start=args.p_start, p_max=args.p_max, seed=args.seed, rtr=rtr)


def _exit_code(status):
    return EXIT_OK if status in (CERTIFIED, COROLLARY3) else EXIT_UNCERTIFIED


def solve_maxcut(path, p_start=2, p_max=None, tol_grad=2e-6, samples=1000, seed=0):
    graph = read_gset(path)
    problem = build_problem(graph)
    ns = argparse.Namespace(p_start=p_start, p_max=p_max, tol_grad=tol_grad, seed=seed)
    Y, cert, report = run(problem, _config(ns), instance=os.path.basename(path))
    cut = gw_round(problem, Y, samples=samples, seed=seed, cert=cert)
    report.cut = {
        "cut_bound": cut_bound(problem, Y, cert),
        "best_cut": cut.cut_value,
        "sdp_value": problem.sdp_cut_value(Y),
        "samples": samples,
        "edges": graph.num_edges,
    }
    return report


def solve_file(path, p_start=2, p_max=None, tol_grad=2e-6, seed=0):
    problem = read_problem(path)
    ns = argparse.Namespace(p_start=p_start, p_max=p_max, tol_grad=tol_grad, seed=seed)
    _, _, report = run(problem, _config(ns), instance=os.path.basename(path))
    return report


def _text_report(report, timings=True):
    d = report.to_dict(timings=timings)
    out = [f"instance: {d['instance']}  class: {d['constraint_class']}  "
           f"n={d['n']} m={d['m']}  seed={d['seed']}"]
    head = f"{'p':>5} {'iters':>6} {'f(Y)':>18} {'|grad f|':>10} {'lambda_min(S) enclosure':>27} {'gap_bound':>10}"
    if timings:
        head += f" {'time(s)':>8}"
    out.append(head)
    for lvl in d["levels"]:
        lo, hi = lvl["lambda_min_S"]
        line = (f"{lvl['p']:>5d} {lvl['iterations']:>6d} {lvl['cost']:>18.10g} "
                f"{lvl['grad_norm']:>10.2e} [{lo:>11.4e}, {hi:>11.4e}] {lvl['gap_bound']:>10.2e}")
        if timings:
            line += f" {lvl['seconds']:>8.3f}"
        out.append(line)
    if d["cut"]:
        c = d["cut"]
        lo = d["certificate"]["lambda_min_S"][0]
        out.append(f"{'cut bound':>12} {'lambda_min(S)':>14} {'best cut':>10}"
                   + (f" {'time(s)':>8}" if timings else ""))
        out.append(f"{c['cut_bound']:>12.6f} {lo:>14.4e} {c['best_cut']:>10.6g}"
                   + (f" {d['seconds']:>8.3f}" if timings else ""))
    out.append(f"status: {d['status']}  final p: {d['final_p']}  "
               f"gap_bound: {d['certificate']['gap_bound']:.3e}")
    return "\n".join(out)


def _emit(report, args):
    timings = not args.no_timings
    if args.format == "json":
        print(dumps(report.to_dict(timings=timings)))
    else:
        print(_text_report(report, timings=timings))


# -- commands ----------------------------------------------------------------
def cmd_maxcut(args):
    report = solve_maxcut(args.path, args.p_start, args.p_max, args.tol_grad,
                          args.samples, args.seed)
    _emit(report, args)
    return _exit_code(report.status)


def cmd_solve(args):
    report = solve_file(args.path, args.p_start, args.p_max, args.tol_grad, args.seed)
    _emit(report, args)
    return _exit_code(report.status)


def cmd_certify(args):
    problem = read_problem(args.problem)
    Y = read_factor(args.factor, problem.n)
    try:
        cert = certify(problem, Y, seed=args.seed)
    except InfeasiblePointError as exc:
        raise ProblemFileError(_violation_message(problem, exc)) from None
    mu = np.asarray(cert.mu, dtype=float).ravel()
    out = cert.to_dict()
    out["mu_summary"] = {"size": int(mu.size), "min": float(mu.min()), "max": float(mu.max()),
                         "mean": float(mu.mean()), "norm": float(np.linalg.norm(mu))}
    out["dual_feasible"] = dual_feasibility(problem, cert)
    out["seed"] = args.seed
    if args.format == "json":
        print(dumps(out))
    else:
        lo, hi = cert.lambda_min_S
        s = out["mu_summary"]
        print(f"mu: {s['size']} entries, min {s['min']:.6g}, max {s['max']:.6g}, "
              f"norm {s['norm']:.6g}")
        print(f"lambda_min(S) in [{lo:.6e}, {hi:.6e}]")
        print(f"f(Y) = {cert.cost:.12g}, ||grad f|| = {cert.grad_norm:.3e}")
        print(f"gap bound (general)    = {cert.general_gap_bound:.6e}")
        if cert.simplified_gap_bound is not None:
            print(f"gap bound (simplified) = {cert.simplified_gap_bound:.6e}")
        print(f"lower bound on f*      = {cert.lower_bound:.12g}")
        print(f"dual value <b, mu>     = {cert.dual_value:.12g} "
              f"({'dual feasible' if out['dual_feasible'] else 'not dual feasible'})")
    return EXIT_OK


def _bench_one(job):
    path, kind, opts = job
    try:
        if kind == "maxcut":
            rep = solve_maxcut(path, **opts)
        else:
            rep = solve_file(path, **{k: v for k, v in opts.items() if k != "samples"})
        return rep, None
    except (OSError, SmoothSDPError, ValueError) as exc:
        return None, f"{os.path.basename(path)}: {exc}"


def cmd_bench(args):
    if not os.path.isdir(args.directory):
        raise ProblemFileError(f"not a directory: {args.directory}")
    files = sorted(
        os.path.join(args.directory, f) for f in os.listdir(args.directory)
        if os.path.isfile(os.path.join(args.directory, f)) and not f.startswith(".")
    )
    opts = dict(p_start=args.p_start, p_max=args.p_max, tol_grad=args.tol_grad,
                samples=args.samples, seed=args.seed)
    jobs = [(f, args.kind, opts) for f in files]
    if args.jobs == 1 or len(jobs) <= 1:
        results = [_bench_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_one, jobs))  # map keeps input order
    timings = not args.no_timings
    code = EXIT_OK
    entries = []
    for f, (rep, err) in zip(files, results):
        if err is not None:
            print(err, file=sys.stderr)
            entries.append({"instance": os.path.basename(f), "error": err})
            code = EXIT_INPUT
            continue
        if rep.status not in (CERTIFIED, COROLLARY3) and code == EXIT_OK:
            code = EXIT_UNCERTIFIED
        entries.append(rep.to_dict(timings=timings))
    if args.format == "json":
        print(dumps(entries))
    else:
        for f, (rep, err) in zip(files, results):
            if rep is not None:
                print(_text_report(rep, timings=timings))
                print()
    return code


# -- argument parsing --------------------------------------------------------
def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smoothsdp",
        description="Low-rank smooth SDP solver with optimality certificates.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-level progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=False):
        p.add_argument("--p-start", type=_positive_int, default=2)
        p.add_argument("--p-max", type=_positive_int, default=None)
        p.add_argument("--tol-grad", type=_positive_float, default=2e-6)
        if samples:
            p.add_argument("--samples", type=_positive_int, default=1000)
        p.add_argument("--seed", type=_nonneg_int, default=0)
        p.add_argument("--format", choices=("json", "text"), default="text")
        p.add_argument("--no-timings", action="store_true",
                       help="omit wall-clock times (byte-identical output per seed)")

    p = sub.add_parser("maxcut", help="solve a Max-Cut instance in Gset format")
    p.add_argument("path")
    common(p, samples=True)
    p.set_defaults(func=cmd_maxcut)

    p = sub.add_parser("solve", help="solve a generic problem file")
    p.add_argument("path")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="certify a given factor Y")
    p.add_argument("problem")
    p.add_argument("factor", help="dense whitespace-separated n x p matrix")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bench", help="solve every file in a directory in parallel")
    p.add_argument("directory")
    p.add_argument("--kind", choices=("maxcut", "solve"), default="maxcut")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1)
    common(p, samples=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; report them as input errors
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, GsetParseError, ProblemFileError, SmoothSDPError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
