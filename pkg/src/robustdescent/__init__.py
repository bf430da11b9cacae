"""Steepest descent for worst-case robust multiobjective problems.

Given m objectives evaluated across a finite set of p scenarios, the
worst-case counterpart minimizes Phi_j(x) = max_i f_j(x, xi_i) over all
objectives simultaneously.  This package provides the descent direction
subproblem (a simplex-constrained dual QP with a KKT certificate), a
backtracking or constant-step outer iteration, diagnostics that certify the
convergence theory on recorded traces, and a CLI around TOML problem files
and CSV traces.
"""

from .diagnostics import (
    FejerReport,
    GradientReport,
    RateReport,
    SummabilityReport,
    brute_force_subproblem,
    check_fejer,
    check_gradients,
    check_rate,
    check_summability,
)
from .expr import ExpressionError, ExpressionProgram, eval_grad, parse, pretty
from .linesearch import LineSearchError, LineSearchResult, armijo_search, phi_star
from .probfile import ProblemFormatError, load_problem
from .problems import (
    EvaluationError,
    ProblemInstance,
    RobustEvaluation,
    ScenarioSet,
    builtin_problems,
    evaluate_robust,
    get_builtin,
    make_quadratic_problem,
)
from .solver import (
    CONVERGED,
    LINE_SEARCH_FAILURE,
    MAX_ITERATIONS,
    SUBPROBLEM_FAILURE,
    IterationRecord,
    SolverConfig,
    SolverTrace,
    run,
    run_batch,
)
from .subproblem import (
    SubproblemData,
    SubproblemSolution,
    assemble,
    project_simplex,
    solve,
    solve_dual,
)
from .tracefile import TraceFormatError, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "CONVERGED",
    "LINE_SEARCH_FAILURE",
    "MAX_ITERATIONS",
    "SUBPROBLEM_FAILURE",
    "EvaluationError",
    "ExpressionError",
    "ExpressionProgram",
    "FejerReport",
    "GradientReport",
    "IterationRecord",
    "LineSearchError",
    "LineSearchResult",
    "ProblemFormatError",
    "ProblemInstance",
    "RateReport",
    "RobustEvaluation",
    "ScenarioSet",
    "SolverConfig",
    "SolverTrace",
    "SubproblemData",
    "SubproblemSolution",
    "SummabilityReport",
    "TraceFormatError",
    "armijo_search",
    "assemble",
    "brute_force_subproblem",
    "builtin_problems",
    "check_fejer",
    "check_gradients",
    "check_rate",
    "check_summability",
    "eval_grad",
    "evaluate_robust",
    "get_builtin",
    "load_problem",
    "make_quadratic_problem",
    "parse",
    "phi_star",
    "pretty",
    "project_simplex",
    "read_trace",
    "run",
    "run_batch",
    "solve",
    "solve_dual",
    "write_trace",
]
