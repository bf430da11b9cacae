"""Command-line front end.

Verbs:

* ``run PROBLEM --x0 ...``   solve and write a trace file
* ``check WHICH ...``        replay a diagnostic on a trace and/or problem
* ``list``                   show the built-in problems
* ``report --trace ...``     render figures + plot data from a trace

PROBLEM is either a built-in name (see ``list``) or a path to a TOML
problem file.  Exit codes: 0 success/converged, 1 input error, 2 iteration
cap, 3 line-search or subproblem failure, 4 failed check.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .probfile import ProblemFormatError, load_problem
from .problems import EvaluationError, ProblemInstance, builtin_problems, get_builtin
from .solver import (
    CONVERGED,
    LINE_SEARCH_FAILURE,
    MAX_ITERATIONS,
    SUBPROBLEM_FAILURE,
    SolverConfig,
    SolverTrace,
    run,
)
from .tracefile import TraceFormatError, read_trace, write_trace

__all__ = ["main", "console_main"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAXITER = 2
EXIT_SOLVE_FAILURE = 3
EXIT_CHECK_FAILED = 4


class _InputError(Exception):
    pass


def _resolve_problem(spec: str) -> ProblemInstance:
    try:
        return get_builtin(spec)
    except KeyError:
        pass
    if Path(spec).exists():
        try:
            return load_problem(spec)
        except ProblemFormatError as exc:
            raise _InputError(str(exc)) from exc
    raise _InputError(
        f"{spec!r} is neither a builtin problem nor an existing file"
    )


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    parts = [p for chunk in text.split(",") for p in chunk.split()] if text else []
    try:
        values = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise _InputError(f"{what}: {exc}") from exc
    if values.size != n:
        raise _InputError(f"{what} needs {n} components, got {values.size}")
    return values


def _build_config(args) -> SolverConfig:
    try:
        return SolverConfig(
            epsilon=args.eps,
            beta=args.beta,
            max_iterations=args.max_iters,
            step_mode=args.mode,
            alpha=args.alpha,
            subproblem_tol=args.subproblem_tol,
        )
    except ValueError as exc:
        raise _InputError(str(exc)) from exc


def _cmd_run(args) -> int:
    problem = _resolve_problem(args.problem)
    x0 = _parse_vector(args.x0, problem.n, "--x0")
    config = _build_config(args)
    try:
        trace = run(problem, x0, config)
    except (ValueError, EvaluationError) as exc:
        raise _InputError(str(exc)) from exc

    out = Path(args.out) if args.out else Path(f"{problem.name or 'problem'}_trace.csv")
    write_trace(trace, out)

    final = trace.records[-1]
    print(f"problem:     {problem.name or args.problem}")
    print(f"termination: {trace.termination} after {len(trace) - 1} steps")
    print(f"final x:     {np.array2string(final.x, precision=10)}")
    print(f"final Phi:   {np.array2string(final.phi, precision=10)}")
    print(f"final Theta: {final.theta:.6e}")
    print(f"trace:       {out}")

    if args.plot_data:
        from .plots import write_plot_data

        write_plot_data(trace, args.plot_data, problem)
        print(f"plot data:   {args.plot_data}")
    if args.figures:
        from .plots import render_trace_figures

        for figure in render_trace_figures(
            trace, args.figures, problem, stem=problem.name or "trace"
        ):
            print(f"figure:      {figure}")

    if trace.termination == CONVERGED:
        return EXIT_OK
    if trace.termination == MAX_ITERATIONS:
        return EXIT_MAXITER
    if trace.termination in (LINE_SEARCH_FAILURE, SUBPROBLEM_FAILURE):
        return EXIT_SOLVE_FAILURE
    return EXIT_SOLVE_FAILURE


def _load_trace(path: str) -> SolverTrace:
    try:
        return read_trace(path)
    except TraceFormatError as exc:
        raise _InputError(str(exc)) from exc


def _report(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=_jsonify))


def _jsonify(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON-serializable: {type(value)}")


def _cmd_check(args) -> int:
    which = args.which
    problem = _resolve_problem(args.problem) if args.problem else None
    trace = _load_trace(args.trace) if args.trace else None

    if which == "fejer":
        if trace is None:
            raise _InputError("check fejer needs --trace")
        if args.x_tilde is not None:
            if problem is None:
                raise _InputError("--x-tilde needs --problem for the dimension")
            x_tilde = _parse_vector(args.x_tilde, problem.n, "--x-tilde")
        elif problem is not None and problem.known_solution is not None:
            x_tilde = problem.known_solution
        else:
            raise _InputError(
                "check fejer needs --x-tilde or a problem with known_solution"
            )
        try:
            report = diagnostics.check_fejer(trace, x_tilde)
        except ValueError as exc:
            raise _InputError(str(exc)) from exc
        _report(
            {
                "check": "fejer",
                "passed": report.all_hold,
                "min_slack": float(report.slack.min()),
                "delta_sum": report.delta_sum,
                "steps": int(report.slack.size),
            }
        )
        return EXIT_OK if report.all_hold else EXIT_CHECK_FAILED

    if which == "rate":
        if trace is None or problem is None:
            raise _InputError("check rate needs --trace and --problem")
        try:
            report = diagnostics.check_rate(trace, problem)
        except ValueError as exc:
            raise _InputError(str(exc)) from exc
        passed = report.holds_fraction >= args.holds_fraction and (
            report.geometric_mean is None
            or report.geometric_mean <= report.bound + 1e-6
        )
        _report(
            {
                "check": "rate",
                "passed": passed,
                "bound": report.bound,
                "holds_fraction": report.holds_fraction,
                "geometric_mean": report.geometric_mean,
                "ratios": int(report.ratios.size),
            }
        )
        return EXIT_OK if passed else EXIT_CHECK_FAILED

    if which == "summability":
        if trace is None:
            raise _InputError("check summability needs --trace")
        if args.y_hat is not None:
            m = trace.records[0].phi.size
            y_hat = _parse_vector(args.y_hat, m, "--y-hat")
        elif problem is not None and problem.known_solution is not None:
            from .problems import evaluate_robust

            y_hat = evaluate_robust(problem, problem.known_solution).phi
        else:
            raise _InputError(
                "check summability needs --y-hat or a problem with known_solution"
            )
        beta = trace.config.beta if trace.config is not None else 0.1
        try:
            report = diagnostics.check_summability(trace, beta, y_hat)
        except ValueError as exc:
            raise _InputError(str(exc)) from exc
        _report(
            {
                "check": "summability",
                "passed": report.all_hold,
                "partial_sum": report.partial_sum,
                "bounds": report.bounds,
            }
        )
        return EXIT_OK if report.all_hold else EXIT_CHECK_FAILED

    if which == "gradients":
        if problem is None:
            raise _InputError("check gradients needs --problem")
        rng = np.random.default_rng(args.seed)
        points = list(rng.uniform(-2.0, 2.0, size=(args.points, problem.n)))
        report = diagnostics.check_gradients(problem, points)
        passed = report.max_rel_error <= args.gradient_tol
        _report(
            {
                "check": "gradients",
                "passed": passed,
                "max_rel_error": report.max_rel_error,
                "tolerance": args.gradient_tol,
                "points": args.points,
                "worst": list(report.worst),
            }
        )
        return EXIT_OK if passed else EXIT_CHECK_FAILED

    if which == "oracle":
        if problem is None:
            raise _InputError("check oracle needs --problem")
        if problem.n > 3:
            raise _InputError("oracle limited to n <= 3")
        from .subproblem import solve

        rng = np.random.default_rng(args.seed)
        points = rng.uniform(-2.0, 2.0, size=(args.points, problem.n))
        worst_theta = 0.0
        worst_t = 0.0
        for point in points:
            sub = solve(problem, point)
            t_grid, theta_grid = diagnostics.brute_force_subproblem(
                problem, point, resolution=args.resolution
            )
            worst_theta = max(worst_theta, abs(sub.theta - theta_grid))
            worst_t = max(worst_t, float(np.abs(sub.direction - t_grid).max()))
        passed = worst_theta <= 1e-2 and worst_t <= 5e-3
        _report(
            {
                "check": "oracle",
                "passed": passed,
                "max_theta_gap": worst_theta,
                "max_direction_gap": worst_t,
                "points": args.points,
                "resolution": args.resolution,
            }
        )
        return EXIT_OK if passed else EXIT_CHECK_FAILED

    raise _InputError(f"unknown check {which!r}")


def _cmd_list(_args) -> int:
    for name, problem in builtin_problems().items():
        print(f"{name:20s} n={problem.n} m={problem.m} p={problem.p}  {problem.description}")
    return EXIT_OK


def _cmd_report(args) -> int:
    trace = _load_trace(args.trace)
    problem = _resolve_problem(args.problem) if args.problem else None
    out_dir = Path(args.out_dir)
    from .plots import render_trace_figures, write_plot_data

    stem = trace.problem_name or Path(args.trace).stem
    data_path = write_plot_data(trace, out_dir / f"{stem}_plotdata.csv", problem)
    print(f"plot data: {data_path}")
    for figure in render_trace_figures(trace, out_dir, problem, stem=stem):
        print(f"figure:    {figure}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustdescent",
        description="Steepest descent for worst-case robust multiobjective problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a problem and write a trace")
    p_run.add_argument("problem", help="builtin name or problem file path")
    p_run.add_argument("--x0", required=True, help="start point, comma-separated")
    p_run.add_argument("--eps", type=float, default=1e-8, help="stop when |Theta| < eps")
    p_run.add_argument("--beta", type=float, default=0.1, help="decrease constant")
    p_run.add_argument("--mode", choices=["armijo", "constant"], default="armijo")
    p_run.add_argument("--alpha", type=float, default=None, help="constant step size")
    p_run.add_argument("--max-iters", type=int, default=10000)
    p_run.add_argument("--subproblem-tol", type=float, default=1e-8)
    p_run.add_argument("--out", default=None, help="trace output path")
    p_run.add_argument("--plot-data", default=None, help="write plot-ready columns")
    p_run.add_argument("--figures", default=None, help="render figures into DIR")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="run a diagnostic")
    p_check.add_argument(
        "which", choices=["fejer", "rate", "summability", "gradients", "oracle"]
    )
    p_check.add_argument("--trace", default=None, help="trace file")
    p_check.add_argument("--problem", default=None, help="builtin name or file")
    p_check.add_argument("--x-tilde", default=None, help="reference point")
    p_check.add_argument("--y-hat", default=None, help="component-wise lower bound")
    p_check.add_argument("--seed", type=int, default=0, help="fixture generation only")
    p_check.add_argument("--points", type=int, default=20)
    p_check.add_argument("--resolution", type=float, default=1e-3)
    p_check.add_argument("--gradient-tol", type=float, default=1e-5)
    p_check.add_argument("--holds-fraction", type=float, default=0.95)
    p_check.set_defaults(func=_cmd_check)

    p_list = sub.add_parser("list", help="list builtin problems")
    p_list.set_defaults(func=_cmd_list)

    p_report = sub.add_parser("report", help="render figures and plot data")
    p_report.add_argument("--trace", required=True)
    p_report.add_argument("--problem", default=None)
    p_report.add_argument("--out-dir", default=".")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv: list | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def console_main() -> None:
    raise SystemExit(main())
