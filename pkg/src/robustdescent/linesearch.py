"""Backtracking step selection on the dyadic grid {1/2, 1/4, 1/8, ...}.

A step alpha is accepted once every worst-case component satisfies the
sufficient-decrease test

    Phi_j(x + alpha t) <= Phi_j(x) + alpha * beta * Phi*_j(x, t),

where Phi*_j(x, t) = max_i { f_j(x, xi_i) + grad f_j(x, xi_i)' t } - Phi_j(x)
is the worst-case linearized decrease.  Candidates are tested largest first,
and each trial re-evaluates the full m*p value table; there is no
interpolation model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemInstance, RobustEvaluation, evaluate_robust

__all__ = ["LineSearchError", "LineSearchResult", "phi_star", "armijo_search"]

DEFAULT_BETA = 0.1
DEFAULT_R_MAX = 60


class LineSearchError(RuntimeError):
    """No step on the dyadic grid passed the decrease test.

    Carries the per-objective residuals (lhs - rhs of the test) at the
    smallest step tried; positive entries indicate either a wrong gradient
    or a non-descent direction.
    """

    def __init__(self, message: str, residuals: np.ndarray, r_max: int):
        super().__init__(message)
        self.residuals = residuals
        self.r_max = r_max


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    r: int  # alpha == 2**-r
    trials: int
    phi_star: np.ndarray  # (m,)


def phi_star(evaluation: RobustEvaluation, direction: np.ndarray) -> np.ndarray:
    """Worst-case linearized decrease per objective; negative off criticality."""
    direction = np.asarray(direction, dtype=float)
    m, p, n = evaluation.gradients.shape
    if direction.shape != (n,):
        raise ValueError(f"direction has shape {direction.shape}, expected ({n},)")
    linearized = evaluation.values + evaluation.gradients @ direction
    return linearized.max(axis=1) - evaluation.phi


def armijo_search(
    problem: ProblemInstance,
    x: np.ndarray,
    direction: np.ndarray,
    beta: float = DEFAULT_BETA,
    r_max: int = DEFAULT_R_MAX,
    evaluation: RobustEvaluation | None = None,
) -> LineSearchResult:
    """Largest dyadic step passing the decrease test for all objectives.

    Parameters
    ----------
    problem, x : the problem and current point
    direction : a descent direction from the subproblem (must be nonzero)
    beta : sufficient-decrease constant in (0, 1)
    r_max : smallest candidate is 2**-r_max
    evaluation : optional robust evaluation at x, to avoid recomputing it

    Raises
    ------
    LineSearchError
        When the grid is exhausted without acceptance.
    ValueError
        For a zero direction (searching from a critical point) or bad beta.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    direction = np.asarray(direction, dtype=float)
    if not direction.any():
        raise ValueError("direction is zero: x is critical, nothing to search")
    if evaluation is None:
        evaluation = evaluate_robust(problem, x)
    decrease = phi_star(evaluation, direction)
    phi0 = evaluation.phi

    residuals = None
    for r in range(1, r_max + 1):
        alpha = 2.0**-r
        trial = evaluate_robust(problem, evaluation.x + alpha * direction)
        residuals = trial.phi - (phi0 + alpha * beta * decrease)
        if (residuals <= 0.0).all():
            return LineSearchResult(
                alpha=alpha, r=r, trials=r, phi_star=decrease
            )
    raise LineSearchError(
        f"no step in {{2^-r : r <= {r_max}}} satisfies the decrease test",
        residuals=residuals,
        r_max=r_max,
    )
