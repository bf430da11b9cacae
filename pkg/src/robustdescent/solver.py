"""Outer descent iteration on the worst-case counterpart.

Each step solves the direction subproblem, stops once |theta| drops below
the tolerance, otherwise advances x by a backtracked (or constant) step
along the direction and records the iterate.  Execution is deterministic:
identical inputs produce identical traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .linesearch import LineSearchError, armijo_search
from .problems import EvaluationError, ProblemInstance, evaluate_robust
from .subproblem import DEFAULT_TOL, assemble, solve_dual

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolverTrace",
    "CONVERGED",
    "MAX_ITERATIONS",
    "LINE_SEARCH_FAILURE",
    "SUBPROBLEM_FAILURE",
    "run",
    "run_batch",
]

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
LINE_SEARCH_FAILURE = "line_search_failure"
SUBPROBLEM_FAILURE = "subproblem_failure"

STEP_MODES = ("armijo", "constant")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the outer iteration.

    ``constant`` mode applies x + alpha*t unconditionally (no decrease test)
    and requires the problem to carry a smoothness constant gamma with
    alpha <= 1/gamma; that regime is what the contraction diagnostics check.
    """

    epsilon: float = 1e-8
    beta: float = 0.1
    max_iterations: int = 10000
    step_mode: str = "armijo"
    alpha: float | None = None
    subproblem_tol: float = DEFAULT_TOL
    active_tolerance: float | None = None
    record_multipliers: bool = True
    r_max: int = 60

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_mode not in STEP_MODES:
            raise ValueError(f"step_mode must be one of {STEP_MODES}")
        if self.step_mode == "constant":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("constant mode needs alpha > 0")
        if self.subproblem_tol <= 0:
            raise ValueError("subproblem_tol must be positive")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    x: np.ndarray
    phi: np.ndarray
    theta: float
    direction: np.ndarray
    direction_norm: float
    alpha: float  # 0.0 on the terminal record
    lam: np.ndarray | None
    line_search_trials: int


@dataclass(frozen=True)
class SolverTrace:
    records: tuple
    termination: str
    final_x: np.ndarray
    problem_name: str = ""
    config: SolverConfig | None = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def xs(self) -> np.ndarray:
        return np.array([record.x for record in self.records])

    @property
    def phis(self) -> np.ndarray:
        return np.array([record.phi for record in self.records])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([record.theta for record in self.records])

    @property
    def direction_norms(self) -> np.ndarray:
        return np.array([record.direction_norm for record in self.records])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([record.alpha for record in self.records])


def _validate_constant_mode(problem: ProblemInstance, config: SolverConfig) -> None:
    gamma = problem.smoothness_constant
    if gamma is None:
        raise ValueError(
            "constant step mode requires the problem's smoothness constant"
        )
    if config.alpha > 1.0 / gamma + 1e-15:
        raise ValueError(
            f"constant step alpha={config.alpha} exceeds 1/gamma={1.0 / gamma}"
        )


def run(
    problem: ProblemInstance, x0: np.ndarray, config: SolverConfig | None = None
) -> SolverTrace:
    """Iterate from x0 until |theta| < epsilon or a cap/failure is hit.

    Returns a trace whose termination is one of ``converged``,
    ``max_iterations``, ``line_search_failure`` (decrease test exhausted) or
    ``subproblem_failure`` (direction not certified at the requested
    tolerance).  Failures keep the partial trace.
    """
    if config is None:
        config = SolverConfig()
    x = np.asarray(x0, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({problem.n},)")
    if config.step_mode == "constant":
        _validate_constant_mode(problem, config)

    records: list[IterationRecord] = []

    def record_terminal(k, evaluation, sub, trials=0):
        records.append(
            IterationRecord(
                k=k,
                x=evaluation.x,
                phi=evaluation.phi,
                theta=sub.theta,
                direction=sub.direction,
                direction_norm=float(np.linalg.norm(sub.direction)),
                alpha=0.0,
                lam=sub.lam if config.record_multipliers else None,
                line_search_trials=trials,
            )
        )

    k = 0
    while True:
        evaluation = evaluate_robust(problem, x, config.active_tolerance)
        sub = solve_dual(assemble(evaluation), tol=config.subproblem_tol)
        if not sub.certified:
            record_terminal(k, evaluation, sub)
            return _finish(records, SUBPROBLEM_FAILURE, problem, config)
        if abs(sub.theta) < config.epsilon:
            record_terminal(k, evaluation, sub)
            return _finish(records, CONVERGED, problem, config)
        if k >= config.max_iterations:
            record_terminal(k, evaluation, sub)
            return _finish(records, MAX_ITERATIONS, problem, config)

        if config.step_mode == "constant":
            alpha = float(config.alpha)
            trials = 0
        else:
            try:
                ls = armijo_search(
                    problem,
                    x,
                    sub.direction,
                    beta=config.beta,
                    r_max=config.r_max,
                    evaluation=evaluation,
                )
            except LineSearchError:
                record_terminal(k, evaluation, sub, trials=config.r_max)
                return _finish(records, LINE_SEARCH_FAILURE, problem, config)
            alpha = ls.alpha
            trials = ls.trials

        records.append(
            IterationRecord(
                k=k,
                x=evaluation.x,
                phi=evaluation.phi,
                theta=sub.theta,
                direction=sub.direction,
                direction_norm=float(np.linalg.norm(sub.direction)),
                alpha=alpha,
                lam=sub.lam if config.record_multipliers else None,
                line_search_trials=trials,
            )
        )
        x = evaluation.x + alpha * sub.direction
        k += 1


def _finish(records, termination, problem, config) -> SolverTrace:
    return SolverTrace(
        records=tuple(records),
        termination=termination,
        final_x=records[-1].x,
        problem_name=problem.name,
        config=config,
    )


def run_batch(
    problems: Sequence[ProblemInstance],
    starts: Sequence[np.ndarray],
    config: SolverConfig | None = None,
) -> list:
    """Run each (problem, start) pair; failures are collected, not raised.

    Returns a list aligned with the inputs whose entries are SolverTrace on
    success and the raised exception otherwise.
    """
    if len(problems) != len(starts):
        raise ValueError("problems and starts must have the same length")
    results: list = []
    for problem, x0 in zip(problems, starts):
        try:
            results.append(run(problem, x0, config))
        except (ValueError, EvaluationError) as exc:
            results.append(exc)
    return results
