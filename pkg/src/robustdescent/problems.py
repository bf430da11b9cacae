"""Uncertain multiobjective problems with finite scenario sets.

A problem holds m objective evaluators f_j(x, xi) over a finite set of p
scenario vectors.  Its worst-case robust counterpart is the vector function
Phi with components Phi_j(x) = max_i f_j(x, xi_i); ``evaluate_robust``
computes Phi together with the full value/gradient tables and the active
scenario sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "EvaluationError",
    "ScenarioSet",
    "ProblemInstance",
    "RobustEvaluation",
    "evaluate_robust",
    "make_quadratic_problem",
    "builtin_problems",
    "get_builtin",
]

# (x, xi) -> (value, gradient)
ObjectiveEvaluator = Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]]


class EvaluationError(RuntimeError):
    """Non-finite objective value or gradient at some (objective, scenario)."""

    def __init__(self, message: str, objective: int, scenario: int):
        super().__init__(message)
        self.objective = objective  # 0-based
        self.scenario = scenario  # 0-based


@dataclass(frozen=True)
class ScenarioSet:
    """Finite uncertainty set: p scenario vectors of identical dimension k."""

    scenarios: np.ndarray  # shape (p, k)

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.scenarios, dtype=float))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("scenario set needs at least one scenario vector")
        object.__setattr__(self, "scenarios", arr)

    @property
    def count(self) -> int:
        return self.scenarios.shape[0]

    @property
    def dimension(self) -> int:
        return self.scenarios.shape[1]


@dataclass(frozen=True)
class ProblemInstance:
    """m differentiable objectives over p scenarios in n decision variables.

    ``smoothness_constant`` (if set) must upper-bound the Lipschitz constants
    of every per-scenario gradient; ``strong_convexity_modulus`` lower-bounds
    the curvature.  Both are trusted inputs, spot-checked by diagnostics.
    """

    n: int
    m: int
    scenario_set: ScenarioSet
    objectives: Sequence[ObjectiveEvaluator]
    smoothness_constant: float | None = None
    strong_convexity_modulus: float | None = None
    known_solution: np.ndarray | None = None
    name: str = ""
    description: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.objectives) != self.m:
            raise ValueError(
                f"expected {self.m} objectives, got {len(self.objectives)}"
            )
        if self.smoothness_constant is not None and self.smoothness_constant <= 0:
            raise ValueError("smoothness_constant must be positive")
        if (
            self.strong_convexity_modulus is not None
            and self.strong_convexity_modulus <= 0
        ):
            raise ValueError("strong_convexity_modulus must be positive")
        if self.known_solution is not None:
            sol = np.asarray(self.known_solution, dtype=float)
            if sol.shape != (self.n,):
                raise ValueError("known_solution has wrong dimension")
            object.__setattr__(self, "known_solution", sol)

    @property
    def p(self) -> int:
        return self.scenario_set.count


@dataclass(frozen=True)
class RobustEvaluation:
    """Full worst-case evaluation of a problem at one point.

    values[j, i] = f_j(x, xi_i); gradients[j, i] = grad f_j(x, xi_i);
    phi[j] = max_i values[j, i]; active_sets[j] holds the 0-based scenario
    indices within ``active_tolerance`` of the row maximum.
    """

    x: np.ndarray
    values: np.ndarray  # (m, p)
    gradients: np.ndarray  # (m, p, n)
    phi: np.ndarray  # (m,)
    active_sets: tuple
    active_tolerance: float | None


def evaluate_robust(
    problem: ProblemInstance,
    x: np.ndarray,
    active_tolerance: float | None = None,
) -> RobustEvaluation:
    """Evaluate all (objective, scenario) pairs at x and form the worst case.

    Parameters
    ----------
    problem : ProblemInstance
    x : point of length problem.n
    active_tolerance : absolute tolerance for active-set membership;
        None selects the relative default 1e-10 * (1 + |phi_j|) per row.
        Ties are kept: every index within tolerance of the maximum is active.

    Raises
    ------
    EvaluationError
        If any value or gradient is non-finite, naming the offending
        (objective, scenario) pair.  Values are never clamped.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.n},)")
    if active_tolerance is not None and active_tolerance < 0:
        raise ValueError("active_tolerance must be >= 0")

    m, p, n = problem.m, problem.p, problem.n
    values = np.empty((m, p))
    gradients = np.empty((m, p, n))
    scenarios = problem.scenario_set.scenarios
    for j, objective in enumerate(problem.objectives):
        for i in range(p):
            value, grad = objective(x, scenarios[i])
            grad = np.asarray(grad, dtype=float)
            if grad.shape != (n,):
                raise ValueError(
                    f"objective {j + 1} returned a gradient of shape {grad.shape}"
                )
            if not np.isfinite(value) or not np.isfinite(grad).all():
                raise EvaluationError(
                    f"non-finite evaluation of objective {j + 1}, scenario {i + 1}",
                    objective=j,
                    scenario=i,
                )
            values[j, i] = value
            gradients[j, i] = grad

    phi = values.max(axis=1)
    active_sets = []
    for j in range(m):
        tol = (
            active_tolerance
            if active_tolerance is not None
            else 1e-10 * (1.0 + abs(phi[j]))
        )
        active = np.nonzero(phi[j] - values[j] <= tol)[0]
        active_sets.append(tuple(int(i) for i in active))
    return RobustEvaluation(
        x=x.copy(),
        values=values,
        gradients=gradients,
        phi=phi,
        active_sets=tuple(active_sets),
        active_tolerance=active_tolerance,
    )


# ---------------------------------------------------------------------------
# Quadratic test family: f_j(x, xi_i) = 0.5 x'Q_ij x + b_ij'x + c_ij

def make_quadratic_problem(
    Q: Sequence[Sequence[np.ndarray]],
    b: Sequence[Sequence[np.ndarray]],
    c: Sequence[Sequence[float]],
    known_solution: np.ndarray | None = None,
    with_constants: bool = True,
    name: str = "",
    description: str = "",
) -> ProblemInstance:
    """Build a problem from m x p quadratic pieces with exact gradients.

    Q, b, c are m x p nested lists of symmetric n x n matrices, n-vectors and
    scalars.  Scenario vectors are synthesized as the flat index (the pieces
    carry all scenario dependence).  With ``with_constants``, the smoothness
    constant (max spectral norm) and, when all pieces are positive definite,
    the strong-convexity modulus are attached.
    """
    m = len(Q)
    if m < 1 or len(b) != m or len(c) != m:
        raise ValueError("Q, b, c must be nonempty m x p nested lists")
    p = len(Q[0])
    if p < 1 or any(len(row) != p for row in (*Q, *b, *c)):
        raise ValueError("Q, b, c rows must all have the same length p")

    Qmats = [[np.asarray(Q[j][i], dtype=float) for i in range(p)] for j in range(m)]
    bvecs = [[np.asarray(b[j][i], dtype=float) for i in range(p)] for j in range(m)]
    cvals = [[float(c[j][i]) for i in range(p)] for j in range(m)]
    n = Qmats[0][0].shape[0]
    for j in range(m):
        for i in range(p):
            mat = Qmats[j][i]
            if mat.shape != (n, n):
                raise ValueError(f"Q[{j}][{i}] has shape {mat.shape}, expected ({n}, {n})")
            if np.abs(mat - mat.T).max() > 1e-12:
                raise ValueError(f"Q[{j}][{i}] is not symmetric within 1e-12")
            if bvecs[j][i].shape != (n,):
                raise ValueError(f"b[{j}][{i}] has wrong length")

    def make_objective(j: int) -> ObjectiveEvaluator:
        mats, vecs, offs = Qmats[j], bvecs[j], cvals[j]

        def objective(x: np.ndarray, xi: np.ndarray) -> tuple[float, np.ndarray]:
            i = int(xi[0])
            mat, vec = mats[i], vecs[i]
            return float(0.5 * x @ mat @ x + vec @ x + offs[i]), mat @ x + vec

        return objective

    gamma = mu = None
    if with_constants:
        eigs = np.concatenate(
            [np.linalg.eigvalsh(Qmats[j][i]) for j in range(m) for i in range(p)]
        )
        gamma = float(np.abs(eigs).max())
        if gamma == 0.0:
            gamma = None  # linear objectives: any step is safe, no constant needed
        if eigs.min() > 0:
            mu = float(eigs.min())

    return ProblemInstance(
        n=n,
        m=m,
        scenario_set=ScenarioSet(np.arange(p, dtype=float).reshape(p, 1)),
        objectives=[make_objective(j) for j in range(m)],
        smoothness_constant=gamma,
        strong_convexity_modulus=mu,
        known_solution=known_solution,
        name=name,
        description=description,
    )


# ---------------------------------------------------------------------------
# Built-in instances

def _two_scenario_1d() -> ProblemInstance:
    # max{x^2, (x-2)^2}: the parabolas tie at the robust minimizer x* = 1
    return make_quadratic_problem(
        Q=[[np.array([[2.0]]), np.array([[2.0]])]],
        b=[[np.array([0.0]), np.array([-4.0])]],
        c=[[0.0, 4.0]],
        known_solution=np.array([1.0]),
        name="two_scenario_1d",
        description="1-D pair x^2 / (x-2)^2, robust minimizer at the tie point x=1",
    )


def _biobj_quad_2d() -> ProblemInstance:
    # Both objectives are max{.+s'd, .-s'd} around the same center, so the
    # robust Pareto set collapses to that center.
    center = np.array([0.5, -0.25])
    A = np.array([[2.0, 0.0], [0.0, 1.0]])
    B = np.array([[1.5, 0.3], [0.3, 1.0]])
    s1 = np.array([1.0, 0.5])
    s2 = np.array([-0.4, 0.8])
    rows_Q, rows_b, rows_c = [], [], []
    for mat, s in ((A, s1), (B, s2)):
        qs, bs, cs = [], [], []
        for sign in (1.0, -1.0):
            # 0.5 (x-c)'M(x-c) + sign s'(x-c), expanded in x
            qs.append(mat)
            bs.append(-mat @ center + sign * s)
            cs.append(float(0.5 * center @ mat @ center - sign * s @ center))
        rows_Q.append(qs)
        rows_b.append(bs)
        rows_c.append(cs)
    return make_quadratic_problem(
        Q=rows_Q,
        b=rows_b,
        c=rows_c,
        known_solution=center,
        name="biobj_quad_2d",
        description="two strongly convex objectives, two scenarios each, "
        "unique robust minimizer at (0.5, -0.25)",
    )


def _nonconvex_demo() -> ProblemInstance:
    # quartic double well with a scenario-dependent tilt; smooth but nonconvex,
    # so only criticality (not global convergence) applies
    def objective(x: np.ndarray, xi: np.ndarray) -> tuple[float, np.ndarray]:
        t = float(x[0])
        tilt = float(xi[0])
        value = 0.25 * (t * t - 1.0) ** 2 + tilt * t
        grad = np.array([t * (t * t - 1.0) + tilt])
        return value, grad

    return ProblemInstance(
        n=1,
        m=1,
        scenario_set=ScenarioSet(np.array([[0.1], [-0.1]])),
        objectives=[objective],
        name="nonconvex_demo",
        description="double-well quartic with +/-0.1 tilt scenarios; "
        "three robust critical points",
    )


_BUILTINS: dict[str, Callable[[], ProblemInstance]] = {
    "two_scenario_1d": _two_scenario_1d,
    "biobj_quad_2d": _biobj_quad_2d,
    "nonconvex_demo": _nonconvex_demo,
}


def builtin_problems() -> dict[str, ProblemInstance]:
    """Fresh instances of every built-in problem, in a stable order."""
    return {problem_name: factory() for problem_name, factory in _BUILTINS.items()}


def get_builtin(name: str) -> ProblemInstance:
    """Look up one built-in problem by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise KeyError(f"unknown builtin problem {name!r}; known: {known}") from None
    return factory()
