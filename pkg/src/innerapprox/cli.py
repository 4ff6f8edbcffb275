"""Command line: synthesize, verify, plot-data.

Exit codes: 0 success, 1 unreadable or malformed input, 2 synthesis
failure, 3 certification failure (including warnings under ``--strict``).
"""

import argparse
import csv
import logging
import os
import sys

import numpy as np

from ._linalg import TWO_PI, op_norm
from .certify import independent_recheck
from .errors import BudgetExhausted, DomainError, InnerApproxError, ResolutionError
from .serialization import (
    ProblemError,
    approximant_to_json,
    atomic_write_many,
    degrees_summary,
    dumps,
    load_approximant,
    load_problem,
    solve,
)
from .unimodular import eval_step

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SYNTHESIS = 2
EXIT_CERTIFICATION = 3


def _err(msg):
    print(msg, file=sys.stderr)


def _load_problem(path):
    try:
        return load_problem(path)
    except OSError as exc:
        _err(f"error: cannot read {path}: {exc.strerror}")
    except (ProblemError, DomainError) as exc:
        _err(f"error: {path}: {exc}")
    return None


def _load_approximant(path):
    try:
        return load_approximant(path)
    except OSError as exc:
        _err(f"error: cannot read {path}: {exc.strerror}")
    except (ProblemError, DomainError) as exc:
        _err(f"error: {path}: {exc}")
    return None


def cmd_synthesize(args):
    problem = _load_problem(args.problem)
    if problem is None:
        return EXIT_INPUT
    try:
        approx = solve(problem)
    except BudgetExhausted as exc:
        best = exc.certificate.bound if exc.certificate is not None else float("nan")
        print(f"FAIL synthesis: {exc} (best bound={best:.6g})")
        return EXIT_SYNTHESIS
    except ResolutionError as exc:
        print(f"FAIL certification: {exc}")
        return EXIT_CERTIFICATION
    except (DomainError, InnerApproxError) as exc:
        print(f"FAIL synthesis: {exc}")
        return EXIT_SYNTHESIS
    cert = approx.certificate
    summary = (
        f"bound={cert.bound:.6g} measure={cert.exceptional_measure:.6g} "
        f"degrees={degrees_summary(approx)}"
    )
    if not cert.passed:
        print(f"FAIL {summary}")
        return EXIT_CERTIFICATION
    if args.strict and cert.warnings:
        print(f"FAIL strict: {'; '.join(cert.warnings)} {summary}")
        return EXIT_CERTIFICATION
    os.makedirs(args.output, exist_ok=True)
    atomic_write_many(
        [
            (os.path.join(args.output, "certificate.json"), dumps(cert.to_json())),
            (os.path.join(args.output, "approximant.json"), dumps(approximant_to_json(approx))),
        ]
    )
    print(f"PASS {summary}")
    return EXIT_OK


def _consistent(cert):
    claimed = cert.bound < cert.epsilon and cert.exceptional_measure < cert.delta
    return cert.passed == claimed and cert.exceptional_measure <= cert.delta


def cmd_verify(args):
    approx = _load_approximant(args.approximant)
    if approx is None:
        return EXIT_INPUT
    problem = _load_problem(args.problem)
    if problem is None:
        return EXIT_INPUT
    cert = approx.certificate
    if cert is None:
        _err("error: approximant carries no certificate")
        return EXIT_INPUT
    if abs(cert.epsilon - problem.epsilon) > 0 or abs(cert.delta - problem.delta) > 0:
        print("REJECTED certificate was issued for a different (epsilon, delta)")
        return EXIT_CERTIFICATION
    try:
        result = independent_recheck(cert, approx, problem.check_target())
    except (ResolutionError, DomainError) as exc:
        print(f"REJECTED {exc}")
        return EXIT_CERTIFICATION
    ok = result.passed and cert.passed and _consistent(cert)
    word = "VERIFIED" if ok else "REJECTED"
    print(
        f"{word} recorded={result.recorded_bound:.6g} "
        f"rederived={result.rederived_bound:.6g} ratio={result.ratio:.4f}"
    )
    if args.strict and ok and cert.warnings:
        print(f"strict: {'; '.join(cert.warnings)}")
        return EXIT_CERTIFICATION
    return EXIT_OK if ok else EXIT_CERTIFICATION


def plot_rows(approx, target, n):
    theta = np.arange(n) * (TWO_PI / n)
    t = eval_step(target, theta)
    a = np.asarray(approx.boundary_values(theta))
    if a.ndim == 1:
        a = a[:, None, None]
    err = op_norm(t - a)
    inside = approx.exceptional.contains(theta).astype(int)
    dim = t.shape[-1]
    if dim == 1:
        header = ["theta", "target_re", "target_im", "approx_re", "approx_im",
                  "pointwise_error", "in_exceptional"]
        cols = [theta, t[:, 0, 0].real, t[:, 0, 0].imag, a[:, 0, 0].real, a[:, 0, 0].imag, err]
    else:
        header = ["theta"]
        cols = [theta]
        for i in range(dim):
            for j in range(dim):
                header.append(f"error_{i}{j}")
                cols.append(np.abs(t[:, i, j] - a[:, i, j]))
        header += ["pointwise_error", "in_exceptional"]
        cols.append(err)
    rows = [[format(float(c[k]), ".17g") for c in cols] + [str(inside[k])] for k in range(n)]
    return header, rows


def cmd_plot_data(args):
    if args.n <= 0:
        _err("error: -n must be positive")
        return EXIT_INPUT
    approx = _load_approximant(args.approximant)
    if approx is None:
        return EXIT_INPUT
    problem = _load_problem(args.problem)
    if problem is None:
        return EXIT_INPUT
    header, rows = plot_rows(approx, problem.check_target(), args.n)
    out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="innerapprox",
        description="Certified Blaschke quotient approximation of unimodular step functions.",
    )
    p.add_argument("--strict", action="store_true", help="treat certificate warnings as failures")
    p.add_argument("-v", "--verbose", action="store_true", help="log synthesis progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="synthesize and certify an approximant")
    s.add_argument("problem")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_synthesize)

    v = sub.add_parser("verify", help="independently recheck a stored certificate")
    v.add_argument("approximant")
    v.add_argument("problem")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("plot-data", help="emit CSV of target/approximant values on a grid")
    d.add_argument("approximant")
    d.add_argument("problem")
    d.add_argument("-n", type=int, default=2048, help="number of grid points")
    d.add_argument("-o", "--output", help="CSV path (default: stdout)")
    d.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None):
    parser = build_parser()
    # accept --strict after the subcommand as well
    argv = list(sys.argv[1:] if argv is None else argv)
    strict = "--strict" in argv
    argv = [a for a in argv if a != "--strict"]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    args.strict = strict
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
