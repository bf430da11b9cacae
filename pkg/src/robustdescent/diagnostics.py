"""Numerical certification of solver traces and inputs.

These checks replay recorded traces against the inequalities the descent
theory promises (per-step quasi-Fejer slack, weighted summability of the
gaps, per-iteration distance contraction under constant steps) and validate
inputs with independent oracles: central finite differences for gradients
and an exhaustive lattice search for the direction subproblem.  Everything
here is pure arithmetic on trace + problem; nothing feeds back into the
solver path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemInstance, evaluate_robust
from .solver import SolverTrace

__all__ = [
    "FejerReport",
    "RateReport",
    "GradientReport",
    "SummabilityReport",
    "check_fejer",
    "check_rate",
    "brute_force_subproblem",
    "check_gradients",
    "check_summability",
]

FEJER_SLACK_TOL = 1e-10
RATE_RATIO_TOL = 1e-8
SUMMABILITY_TOL = 1e-8


@dataclass(frozen=True)
class FejerReport:
    """Per-step slack of ||xt - x_{k+1}||^2 <= ||xt - x_k||^2 + ||x_k - x_{k+1}||^2."""

    reference_point: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray  # rhs - lhs
    all_hold: bool
    delta_sum: float  # sum of squared step displacements


@dataclass(frozen=True)
class RateReport:
    """Squared-distance contraction ratios against the bound 1 - mu*alpha."""

    reference_solution: np.ndarray
    ratios: np.ndarray
    bound: float
    holds_fraction: float
    geometric_mean: float | None
    excluded: int  # iterates skipped because they already sit on x*


@dataclass(frozen=True)
class GradientReport:
    max_rel_error: float
    worst: tuple  # (objective, scenario, point index), 0-based
    h: np.ndarray  # step used per point
    errors: np.ndarray  # (num_points, m, p)


@dataclass(frozen=True)
class SummabilityReport:
    partial_sum: float  # sum_k alpha_k (|theta_k| + ||t_k||^2 / 2)
    bounds: np.ndarray  # per-objective (phi_j(x0) - y_hat_j) / beta
    holds: np.ndarray
    all_hold: bool


def check_fejer(trace: SolverTrace, x_tilde: np.ndarray) -> FejerReport:
    """Evaluate the per-iteration Fejer inequality around a reference point.

    The inequality is guaranteed when every scenario objective at x_tilde
    lies below its value along the trace (convex case with x_tilde a
    minimizer); the check itself is unconditional arithmetic and simply
    reports the slacks.
    """
    if len(trace) < 2:
        raise ValueError("trace too short: need at least 2 records")
    x_tilde = np.asarray(x_tilde, dtype=float)
    xs = trace.xs
    if x_tilde.shape != (xs.shape[1],):
        raise ValueError("x_tilde has wrong dimension")
    diff_next = ((x_tilde - xs[1:]) ** 2).sum(axis=1)
    diff_cur = ((x_tilde - xs[:-1]) ** 2).sum(axis=1)
    steps = ((xs[:-1] - xs[1:]) ** 2).sum(axis=1)
    rhs = diff_cur + steps
    slack = rhs - diff_next
    return FejerReport(
        reference_point=x_tilde,
        lhs=diff_next,
        rhs=rhs,
        slack=slack,
        all_hold=bool((slack >= -FEJER_SLACK_TOL).all()),
        delta_sum=float(steps.sum()),
    )


def check_rate(trace: SolverTrace, problem: ProblemInstance) -> RateReport:
    """Contraction ratios of a constant-step trace on a strongly convex problem."""
    config = trace.config
    if config is None or config.step_mode != "constant":
        raise ValueError("rate check requires a constant-step trace")
    mu = problem.strong_convexity_modulus
    if mu is None:
        raise ValueError("rate check requires the strong convexity modulus")
    if problem.known_solution is None:
        raise ValueError("rate check requires a known solution")
    alpha = float(config.alpha)
    bound = 1.0 - mu * alpha
    x_star = problem.known_solution
    dist = np.linalg.norm(trace.xs - x_star, axis=1)
    mask = dist[:-1] > 1e-10
    ratios = (dist[1:][mask] ** 2) / (dist[:-1][mask] ** 2)
    if ratios.size:
        holds_fraction = float((ratios <= bound + RATE_RATIO_TOL).mean())
        geometric_mean = float(
            np.exp(np.mean(np.log(np.maximum(ratios, 1e-300))))
        )
    else:
        holds_fraction = 1.0
        geometric_mean = None
    return RateReport(
        reference_solution=x_star,
        ratios=ratios,
        bound=bound,
        holds_fraction=holds_fraction,
        geometric_mean=geometric_mean,
        excluded=int((~mask).sum()),
    )


def brute_force_subproblem(
    problem: ProblemInstance,
    x: np.ndarray,
    radius: float | None = None,
    resolution: float = 1e-3,
) -> tuple[np.ndarray, float]:
    """Lattice argmin of the direction objective; independent of the dual solver.

    Evaluates max_l(a_l + g_l't) + 0.5||t||^2 over successively refined
    axis-aligned lattices: each stage re-centers on the incumbent argmin and
    shrinks, until the spacing reaches ~resolution^2 (the direction error of
    a lattice argmin scales as the square root of the value error, so the
    final spacing must sit well below the requested accuracy).  The first
    box is certain to contain the minimizer because ||t|| is at most
    max_l ||g_l|| (a convex combination of the negated rows); later stages
    re-expand whenever the argmin lands on the box boundary.

    Only for n <= 3; the lattice explodes beyond that.
    """
    if problem.n > 3:
        raise ValueError("brute-force oracle limited to n <= 3")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    evaluation = evaluate_robust(problem, x)
    m, p, n = evaluation.gradients.shape
    columns = evaluation.gradients.reshape(m * p, n)
    offsets = (evaluation.values - evaluation.phi[:, None]).reshape(m * p)
    gmax = float(np.linalg.norm(columns, axis=1).max())
    min_radius = 2.0 * (1.0 + gmax)
    if radius is None:
        radius = min_radius
    if radius <= 0:
        raise ValueError("radius must be positive")

    points_per_axis = {1: 2001, 2: 301, 3: 41}[n]
    target_spacing = max(resolution * resolution, 4e-9)

    def lattice_min(center: np.ndarray, half: float):
        axes = [
            np.linspace(center[d] - half, center[d] + half, points_per_axis)
            for d in range(n)
        ]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        values = (offsets[None, :] + grid @ columns.T).max(axis=1)
        values += 0.5 * (grid * grid).sum(axis=1)
        best = int(values.argmin())
        spacing = 2.0 * half / (points_per_axis - 1)
        on_boundary = bool(
            (np.abs(grid[best] - (center - half)) < 1.5 * spacing).any()
            or (np.abs(grid[best] - (center + half)) < 1.5 * spacing).any()
        )
        return grid[best], float(values[best]), spacing, on_boundary

    center = np.zeros(n)
    half = float(radius)
    expansions = 0
    while True:
        t_best, theta_best, spacing, on_boundary = lattice_min(center, half)
        if on_boundary and half < radius and expansions < 8:
            half = min(4.0 * half, float(radius))
            center = t_best
            expansions += 1
            continue
        if spacing <= target_spacing:
            return t_best, theta_best
        center = t_best
        half = max(8.0 * spacing, 4.0 * target_spacing)


def check_gradients(
    problem: ProblemInstance,
    points: list,
    h: float | None = None,
) -> GradientReport:
    """Compare analytic gradients with central finite differences.

    The step defaults to 1e-6 * (1 + ||x||) per point.  The relative error
    for a pair is ||g_fd - g||_inf / (1 + ||g||_inf).
    """
    m, p, n = problem.m, problem.p, problem.n
    scenarios = problem.scenario_set.scenarios
    errors = np.zeros((len(points), m, p))
    steps = np.zeros(len(points))
    worst = (0, 0, 0)
    worst_err = -1.0
    for idx, point in enumerate(points):
        point = np.asarray(point, dtype=float)
        step = h if h is not None else 1e-6 * (1.0 + float(np.linalg.norm(point)))
        steps[idx] = step
        for j, objective in enumerate(problem.objectives):
            for i in range(p):
                xi = scenarios[i]
                _, grad = objective(point, xi)
                grad = np.asarray(grad, dtype=float)
                fd = np.empty(n)
                for d in range(n):
                    forward = point.copy()
                    backward = point.copy()
                    forward[d] += step
                    backward[d] -= step
                    fp, _ = objective(forward, xi)
                    fm, _ = objective(backward, xi)
                    fd[d] = (fp - fm) / (2.0 * step)
                err = float(
                    np.abs(fd - grad).max() / (1.0 + np.abs(grad).max())
                )
                errors[idx, j, i] = err
                if err > worst_err:
                    worst_err = err
                    worst = (j, i, idx)
    return GradientReport(
        max_rel_error=float(errors.max()) if errors.size else 0.0,
        worst=worst,
        h=steps,
        errors=errors,
    )


def check_summability(
    trace: SolverTrace, beta: float, y_hat: np.ndarray
) -> SummabilityReport:
    """Verify sum_k alpha_k(|theta_k| + ||t_k||^2/2) <= (phi_j(x0) - y_hat_j)/beta.

    y_hat must bound every recorded phi from below, component-wise; the
    natural choice is phi at the robust minimizer.
    """
    config = trace.config
    if config is None or config.step_mode != "armijo":
        raise ValueError("summability check requires a backtracking-mode trace")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    y_hat = np.asarray(y_hat, dtype=float)
    phis = trace.phis
    if y_hat.shape != (phis.shape[1],):
        raise ValueError("y_hat has wrong dimension")
    if (y_hat > phis.min(axis=0)).any():
        raise ValueError("y_hat is not a component-wise lower bound of the trace")
    partial_sum = float(
        (
            trace.alphas
            * (np.abs(trace.thetas) + 0.5 * trace.direction_norms**2)
        ).sum()
    )
    bounds = (phis[0] - y_hat) / beta
    holds = partial_sum <= bounds + SUMMABILITY_TOL
    return SummabilityReport(
        partial_sum=partial_sum,
        bounds=bounds,
        holds=holds,
        all_hold=bool(holds.all()),
    )
