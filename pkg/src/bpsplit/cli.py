"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 unconverged or marginal,
3 internal numerical failure.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .angle_estimation import estimate_angle_dense
from .exceptions import (EnumerationTooLargeError, InsufficientRegimeError, NongenericFaceError,
                         SubspaceIntersectionError, UniquenessError)
from .io import load_matrix, load_vector, save_vector
from .operators import ProxParams
from .problem import ProblemInstance, SupportInfo
from .rate_theory import (compute_geometry, optimal_parameters, rho_closed_form,
                          rho_gdr_closed_form, rho_optimal_relaxation, rip_bound)
from .solvers import SolverConfig, Variant, solve

EXIT_OK, EXIT_INPUT, EXIT_UNCONVERGED, EXIT_NUMERIC = 0, 1, 2, 3


def _support(text, n):
    try:
        idx = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ValueError(f"support must be comma-separated integers, got {text!r}") from exc
    return SupportInfo.from_indices(n, idx)


def _variant(name):
    try:
        return Variant(name.upper())
    except ValueError:
        names = ", ".join(v.value for v in Variant)
        raise argparse.ArgumentTypeError(f"unknown variant {name!r} (choose from {names})")


def cmd_solve(args):
    A = load_matrix(args.matrix)
    b = load_vector(args.rhs)
    P = ProblemInstance(A, b)
    alpha = math.inf if args.alpha is None else args.alpha
    cfg = SolverConfig(args.variant, ProxParams(args.gamma, alpha), lam=args.lam,
                       max_iters=args.max_iters, stop_tol=args.tol)
    res = solve(P, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_vector(out / "x.txt", res.x_final)
    save_vector(out / "y.txt", res.y_final)
    steps = res.trace.steps
    (out / "steps.csv").write_text(
        "k,step\n" + "".join(f"{k + 1},{s!r}\n" for k, s in enumerate(steps)))
    status = "converged" if res.converged else ("stalled" if res.stalled else "max_iters")
    print(f"status {status}  iterations {res.n_iter}  "
          f"residual {np.linalg.norm(A @ res.x_final - b):.3e}  "
          f"l1 {np.abs(res.x_final).sum():.12g}")
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.10g}"


def cmd_analyze(args):
    A = load_matrix(args.matrix)
    S = _support(args.support, A.shape[1])
    geom = compute_geometry(A, S)
    if geom.nullspaces_intersect:
        print("N(A) and N(B) intersect nontrivially: no linear rate", file=sys.stderr)
        return EXIT_INPUT
    theta = geom.theta1
    print(f"theta1 {theta:.12g}")
    print(f"cos_theta1 {math.cos(theta):.12g}")
    if theta > math.pi / 4:
        print("theta1 > pi/4: regularized formulas do not apply")
        return EXIT_OK
    p = optimal_parameters(theta)
    for name in ("c_star", "c_sharp", "c_bar", "c_tilde"):
        print(f"{name} {getattr(p, name):.12g}")
    print("c,rho_dr,rho_pr,rho_best_relaxation")
    for c in sorted({1.0, 0.9, 0.8, 0.7, 0.6, 0.5, p.c_star, p.c_sharp, p.c_bar}, reverse=True):
        print(f"{c:.6g},{_fmt(rho_closed_form(theta, c))},"
              f"{_fmt(rho_gdr_closed_form(theta, c, 2.0))},"
              f"{_fmt(rho_optimal_relaxation(theta, c))}")
    return EXIT_OK


def cmd_estimate_angle(args):
    A = load_matrix(args.matrix)
    S = _support(args.support, A.shape[1])
    est = estimate_angle_dense(A, S, iters=args.iters, method=args.method, rng=args.seed)
    truth = math.cos(compute_geometry(A, S).theta1)
    print(f"method {est.method.value}")
    print(f"cos_theta1_estimate {est.cos_theta1:.12g}")
    print(f"theta1_estimate {est.theta1:.12g}")
    print(f"cos_theta1_svd {truth:.12g}")
    print(f"fit_window {est.fit_window}  residual {est.residual:.3e}")
    return EXIT_OK


def cmd_sweep(args):
    table = harness.sweep_rates(args.theta, harness.parse_grid(args.c_grid),
                                harness.parse_grid(args.lambda_grid))
    Path(args.out).write_text(table.to_csv())
    print(f"c_star {table.c_star:.12g}  c_sharp {table.c_sharp:.12g}  c_bar {table.c_bar:.12g}")
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return EXIT_OK


def cmd_experiment(args):
    spec = harness.ExperimentSpec.from_json(args.spec)
    report = harness.run_experiment(spec)
    sys.stdout.write(report.to_csv())
    statuses = {r.status for r in report.rows}
    if "UNCONVERGED" in statuses:
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_rip_bound(args):
    A = load_matrix(args.matrix)
    rb = rip_bound(A, args.sparsity)
    print(f"delta {rb.delta:.12g}")
    print(f"d {rb.d:.12g}")
    print(f"bound {rb.bound:.12g}")
    print(f"informative {int(rb.d * (1 - rb.delta) <= 1)}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bpsplit",
                                description="Splitting methods for basis pursuit and their rates.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one solver variant")
    s.add_argument("--matrix", required=True)
    s.add_argument("--rhs", required=True)
    s.add_argument("--variant", required=True, type=_variant)
    s.add_argument("--gamma", required=True, type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--max-iters", required=True, type=int)
    s.add_argument("--tol", required=True, type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("analyze", help="angle, optimal parameters and predicted rates")
    s.add_argument("--matrix", required=True)
    s.add_argument("--support", required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("estimate-angle", help="matrix-free estimate of the leading angle")
    s.add_argument("--matrix", required=True)
    s.add_argument("--support", required=True)
    s.add_argument("--method", choices=["altproj", "dr"], default="altproj")
    s.add_argument("--iters", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_estimate_angle)

    s = sub.add_parser("sweep", help="closed-form rate table over (c, lambda)")
    s.add_argument("--theta", required=True, type=float)
    s.add_argument("--c-grid", required=True)
    s.add_argument("--lambda-grid", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("experiment", help="run a JSON experiment spec")
    s.add_argument("--spec", required=True)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("rip-bound", help="brute-force RIP constant and angle bound")
    s.add_argument("--matrix", required=True)
    s.add_argument("--sparsity", required=True, type=int)
    s.set_defaults(func=cmd_rip_bound)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (UniquenessError, InsufficientRegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError, json.JSONDecodeError,
            EnumerationTooLargeError, NongenericFaceError, SubspaceIntersectionError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
