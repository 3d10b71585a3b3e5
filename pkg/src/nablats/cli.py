"""Command-line front end.

Subcommands (each takes a run-file path; see :mod:`nablats.config` for the
file format):

``quad CONFIG --from A --to B``
    Backward-rule integral of the ``[quad]`` expression over ``(A, B]`` on
    the configured grid; prints the value with 15 significant digits.

``check-el CONFIG --trajectory CSV [--form pointwise|integral|finite] [--Tprime T]``
    First-order residual report for a stored trajectory; writes the full
    residual CSV and passes or fails on the chosen residual family.

``solve CONFIG``
    Direct search on the truncated objective; writes the solution
    trajectory CSV and the horizon-by-horizon residual table.

``lemma CONFIG --function CSV [--tol TOL]``
    Constructs an admissible variation whose pairing with the stored
    function is strictly positive, printing the construction case, its
    location, and the pairing value.

``compare CONFIG --candidate CSV --star CSV``
    Tail-margin comparison of two stored trajectories; fails when the
    candidate beats the reference by more than the report tolerance.

Exit codes: 0 pass, 1 tolerance fail, 2 config/usage error, 3 math/domain
error, 4 no nonzero witness (function vanishes at tolerance or its support
is invisible to admissible variations).
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .calculus import CalculusError, GridFunction, nabla_integral
from .config import ConfigError, RunConfig, load_config
from .expressions import ExprDomainError, ExprSyntaxError, evaluate_many, to_source
from .fundamental import construct_violating_variation, default_tolerance, witness_value
from .solver import (
    EnumerationGuardError,
    NonFiniteObjectiveError,
    direct_solve,
    horizon_study,
    horizon_table_to_csv,
)
from .timescale import TimeScaleError
from .variational import (
    AdmissibilityError,
    ProblemError,
    el_report_indices,
    finite_horizon_el_residual,
    residual_report,
    trajectory_from_csv,
    trajectory_to_csv,
    weak_max_compare,
)

#: exit codes, fixed interface
EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_TRIVIAL = 4

_USAGE_ERRORS = (
    ConfigError,
    TimeScaleError,
    CalculusError,
    ProblemError,
    AdmissibilityError,
    ExprSyntaxError,
    EnumerationGuardError,
)
_DOMAIN_ERRORS = (
    ExprDomainError,
    NonFiniteObjectiveError,
    OverflowError,
    ZeroDivisionError,
)


def _fmt(v: float) -> str:
    """15 significant digits, positional."""
    return np.format_float_positional(
        float(v), precision=15, unique=False, fractional=False
    )


def _summary(pairs) -> None:
    for key, value in pairs:
        print(f"{key}: {value}")


def _grid_scalar_from_values(rc: RunConfig, values) -> GridFunction:
    arr = np.asarray(values, dtype=float)
    if len(arr) != len(rc.timescale):
        raise AdmissibilityError(
            f"function has {len(arr)} rows, grid has {len(rc.timescale)} points"
        )
    return GridFunction.scalar(rc.timescale, arr)


def _read_scalar_csv(rc: RunConfig, path) -> GridFunction:
    import csv as _csv

    with open(path, newline="") as fh:
        rd = _csv.reader(fh)
        header = next(rd, None)
        if header != ["t", "f"]:
            raise AdmissibilityError(
                f"bad function header {header!r}, expected ['t', 'f']"
            )
        rows = [(float(r[0]), float(r[1])) for r in rd if r]
    pts = rc.timescale.points
    if len(rows) != len(pts):
        raise AdmissibilityError(
            f"function has {len(rows)} rows, grid has {len(pts)} points"
        )
    for (t, _), expect in zip(rows, pts):
        if t != expect:
            raise AdmissibilityError(
                f"function row at t={t!r} does not match grid point {expect!r}"
            )
    return GridFunction.scalar(rc.timescale, [v for _, v in rows])


# -- subcommands --------------------------------------------------------------


def _cmd_quad(args) -> int:
    rc = load_config(args.config)
    expr = rc.require_quad()
    ts = rc.timescale
    pts = np.asarray(ts.points)
    vals = np.broadcast_to(
        np.asarray(evaluate_many(expr, {"t": pts}), dtype=float), pts.shape
    )
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise ExprDomainError(
            f"integrand '{to_source(expr)}' is non-finite at t={bad!r}"
        )
    value = nabla_integral(GridFunction.scalar(ts, vals), args.from_t, args.to_t)
    print(_fmt(float(value[0])))
    return EXIT_PASS


def _cmd_check_el(args) -> int:
    rc = load_config(args.config)
    p = rc.require_problem()
    x = trajectory_from_csv(p, args.trajectory)
    T_prime = args.Tprime if args.Tprime is not None else p.ts.points[-1]
    report = residual_report(p, x, T_prime)
    report.write_csv(rc.report.report_out)
    if args.form == "pointwise":
        stat = report.max_pointwise
    elif args.form == "integral":
        stat = report.max_spread
    else:  # finite
        k = p.ts.index_of(T_prime)
        rows = [j for j in el_report_indices(p.ts) if j <= k]
        stat = max(
            (
                float(np.max(np.abs(finite_horizon_el_residual(p, x, T_prime, p.ts.points[j]))))
                for j in rows
            ),
            default=0.0,
        )
    ok = stat <= rc.report.tolerance
    _summary(
        [
            ("form", args.form),
            ("T_prime", repr(float(T_prime))),
            ("max_residual", repr(stat)),
            ("tolerance", repr(rc.report.tolerance)),
            ("report", rc.report.report_out),
            ("status", "PASS" if ok else "FAIL"),
        ]
    )
    return EXIT_PASS if ok else EXIT_TOLERANCE


def _cmd_solve(args) -> int:
    rc = load_config(args.config)
    p = rc.require_problem()
    opts = rc.require_options()
    traj, info = direct_solve(p, opts, with_info=True)
    trajectory_to_csv(traj, rc.report.trajectory_out)
    cuts = rc.truncations or (opts.T_trunc,)
    rows = horizon_study(p, list(cuts), opts)
    horizon_table_to_csv(rows, rc.report.horizon_out)
    _summary(
        [
            ("iterations", info.iterations),
            ("converged", "true" if info.converged else "false"),
            ("criterion", repr(info.grad_norm)),
            ("objective", repr(info.objective)),
            ("trajectory", rc.report.trajectory_out),
            ("horizon_table", rc.report.horizon_out),
        ]
    )
    return EXIT_PASS


def _cmd_lemma(args) -> int:
    rc = load_config(args.config)
    g = _read_scalar_csv(rc, args.function)
    ts = rc.timescale
    tol = args.tol if args.tol is not None else default_tolerance(g, ts)
    variation = construct_violating_variation(g, ts, tol=tol)
    if variation is None:
        peak = float(np.max(np.abs(g.values)))
        if peak <= tol:
            print(f"function is zero at tolerance {tol!r} (max |f| = {peak!r})")
        else:
            print(
                "no witness: the remaining mass pairs to zero with every "
                f"admissible variation at tolerance {tol!r} (max |f| = {peak!r})"
            )
        return EXIT_TRIVIAL
    value = float(witness_value(g, variation.eta, ts))
    _summary(
        [
            ("case_tag", variation.case_tag.name),
            ("t0", repr(float(variation.t0))),
            ("witness_value", _fmt(value)),
            ("support", f"({variation.support[0]!r}, {variation.support[1]!r})"),
        ]
    )
    return EXIT_PASS


def _cmd_compare(args) -> int:
    rc = load_config(args.config)
    p = rc.require_problem()
    candidate = trajectory_from_csv(p, args.candidate)
    star = trajectory_from_csv(p, args.star)
    margin = weak_max_compare(p, candidate, star)
    ok = margin <= rc.report.tolerance
    _summary(
        [
            ("margin", repr(margin)),
            ("tolerance", repr(rc.report.tolerance)),
            ("status", "PASS" if ok else "FAIL"),
        ]
    )
    return EXIT_PASS if ok else EXIT_TOLERANCE


# -- parser / entry point ------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nablats",
        description="Backward-difference calculus and infinite-horizon "
        "variational checks on time-scale grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    quad = sub.add_parser("quad", help="integrate the [quad] expression over (from, to]")
    quad.add_argument("config")
    quad.add_argument("--from", dest="from_t", type=float, required=True,
                      help="lower bound (grid point)")
    quad.add_argument("--to", dest="to_t", type=float, required=True,
                      help="upper bound (grid point)")
    quad.set_defaults(handler=_cmd_quad)

    check = sub.add_parser("check-el", help="residual report for a stored trajectory")
    check.add_argument("config")
    check.add_argument("--trajectory", required=True, help="trajectory CSV (t,x1,...,xn)")
    check.add_argument("--form", choices=("pointwise", "integral", "finite"),
                       default="pointwise", help="residual family for pass/fail")
    check.add_argument("--Tprime", type=float, default=None,
                       help="verification horizon (grid point; default: last)")
    check.set_defaults(handler=_cmd_check_el)

    solve = sub.add_parser("solve", help="search the truncated objective and tabulate horizons")
    solve.add_argument("config")
    solve.set_defaults(handler=_cmd_solve)

    lemma = sub.add_parser("lemma", help="construct a positive-pairing variation for a stored function")
    lemma.add_argument("config")
    lemma.add_argument("--function", required=True, help="scalar function CSV (t,f)")
    lemma.add_argument("--tol", type=float, default=None,
                       help="zero threshold (default: scale-dependent)")
    lemma.set_defaults(handler=_cmd_lemma)

    compare = sub.add_parser("compare", help="tail-margin comparison of two trajectories")
    compare.add_argument("config")
    compare.add_argument("--candidate", required=True, help="challenger trajectory CSV")
    compare.add_argument("--star", required=True, help="reference trajectory CSV")
    compare.set_defaults(handler=_cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; normalize its code (0 for --help)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename is not None else exc
        print(f"error: file not found: {name}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # malformed numeric cells in CSV inputs and similar
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
