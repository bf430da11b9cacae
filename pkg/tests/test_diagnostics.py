import numpy as np
import pytest

from helpers import random_quadratic
from robustdescent.diagnostics import (
    brute_force_subproblem,
    check_fejer,
    check_gradients,
    check_rate,
    check_summability,
)
from robustdescent.probfile import problem_from_dict
from robustdescent.problems import (
    ProblemInstance,
    ScenarioSet,
    evaluate_robust,
    get_builtin,
    make_quadratic_problem,
)
from robustdescent.solver import SolverConfig, run
from robustdescent.subproblem import solve


def converged_trace(name, x0, **config_kwargs):
    problem = get_builtin(name)
    trace = run(problem, np.asarray(x0, dtype=float), SolverConfig(**config_kwargs))
    assert trace.termination == "converged"
    return problem, trace


class TestFejer:
    def test_convex_trace_holds(self):
        problem, trace = converged_trace("two_scenario_1d", [0.0])
        report = check_fejer(trace, problem.known_solution)
        assert report.all_hold
        assert report.slack.min() >= -1e-10
        assert report.delta_sum >= 0.0

    def test_short_trace_rejected(self):
        problem, trace = converged_trace("two_scenario_1d", [1.0])
        assert len(trace) == 1
        with pytest.raises(ValueError, match="too short"):
            check_fejer(trace, problem.known_solution)

    def test_adversarial_reference_reports_without_error(self):
        problem, trace = converged_trace("nonconvex_demo", [0.4], epsilon=1e-6)
        report = check_fejer(trace, np.array([50.0]))
        assert report.slack.shape == (len(trace) - 1,)

    def test_delta_sum_matches_displacements(self):
        problem, trace = converged_trace("biobj_quad_2d", [2.0, 2.0])
        report = check_fejer(trace, problem.known_solution)
        xs = trace.xs
        expected = float(((xs[1:] - xs[:-1]) ** 2).sum())
        assert report.delta_sum == pytest.approx(expected, rel=1e-12)


class TestRate:
    def run_constant(self, x0=(3.0, 2.0)):
        problem = get_builtin("biobj_quad_2d")
        alpha = 1.0 / problem.smoothness_constant
        trace = run(
            problem,
            np.asarray(x0, dtype=float),
            SolverConfig(
                step_mode="constant",
                alpha=alpha,
                epsilon=1e-8,
                subproblem_tol=1e-10,
            ),
        )
        return problem, trace

    def test_contraction_holds_on_biobj(self):
        problem, trace = self.run_constant()
        report = check_rate(trace, problem)
        assert report.holds_fraction >= 0.95
        assert report.geometric_mean <= report.bound + 1e-6
        assert report.bound == pytest.approx(
            1.0 - problem.strong_convexity_modulus / problem.smoothness_constant
        )

    def test_trace_at_solution_has_unit_fraction(self):
        problem = get_builtin("biobj_quad_2d")
        alpha = 1.0 / problem.smoothness_constant
        trace = run(
            problem,
            problem.known_solution,
            SolverConfig(step_mode="constant", alpha=alpha),
        )
        report = check_rate(trace, problem)
        assert report.holds_fraction == 1.0
        assert report.ratios.size == 0
        assert report.geometric_mean is None

    def test_backtracking_trace_rejected(self):
        problem, trace = converged_trace("biobj_quad_2d", [1.0, 1.0])
        with pytest.raises(ValueError, match="constant-step"):
            check_rate(trace, problem)

    def test_missing_modulus_rejected(self):
        problem, _ = self.run_constant()
        _, trace = self.run_constant()
        stripped = ProblemInstance(
            n=problem.n,
            m=problem.m,
            scenario_set=problem.scenario_set,
            objectives=problem.objectives,
            smoothness_constant=problem.smoothness_constant,
            known_solution=problem.known_solution,
        )
        with pytest.raises(ValueError, match="modulus"):
            check_rate(trace, stripped)


class TestBruteForce:
    def test_two_scenario_noncritical_point(self):
        problem = get_builtin("two_scenario_1d")
        t, theta = brute_force_subproblem(
            problem, np.array([0.0]), radius=5.0, resolution=1e-4
        )
        assert t[0] == pytest.approx(1.0, abs=1e-4)
        assert theta == pytest.approx(-3.5, abs=1e-4)

    def test_two_scenario_critical_point(self):
        problem = get_builtin("two_scenario_1d")
        t, theta = brute_force_subproblem(problem, np.array([1.0]), resolution=1e-3)
        assert abs(t[0]) <= 1e-3
        assert abs(theta) <= 1e-5

    def test_single_piece_negative_gradient(self):
        problem = make_quadratic_problem(
            Q=[[np.eye(2)]], b=[[np.zeros(2)]], c=[[0.0]]
        )
        t, theta = brute_force_subproblem(problem, np.array([1.0, 0.0]))
        assert t == pytest.approx([-1.0, 0.0], abs=1e-3)
        assert theta == pytest.approx(-0.5, abs=1e-5)

    def test_dimension_limit(self):
        problem = make_quadratic_problem(
            Q=[[np.eye(4)]], b=[[np.zeros(4)]], c=[[0.0]]
        )
        with pytest.raises(ValueError, match="n <= 3"):
            brute_force_subproblem(problem, np.zeros(4))

    def test_agrees_with_dual_solver_on_random_instances(self):
        rng = np.random.default_rng(314)
        for _ in range(20):
            n = int(rng.integers(1, 3))
            m = int(rng.integers(1, 4))
            p = int(rng.integers(1, 4))
            while m * p > 6:
                m = int(rng.integers(1, 4))
                p = int(rng.integers(1, 4))
            problem = random_quadratic(rng, n=n, m=m, p=p)
            for _ in range(3):
                x = rng.uniform(-2, 2, size=n)
                sub = solve(problem, x)
                t_grid, theta_grid = brute_force_subproblem(
                    problem, x, resolution=1e-3
                )
                assert abs(sub.theta - theta_grid) <= 1e-2
                assert np.abs(sub.direction - t_grid).max() <= 5e-3


class TestGradients:
    def test_quadratic_family_tight(self):
        rng = np.random.default_rng(8)
        problem = random_quadratic(rng, n=3, m=2, p=2)
        points = [rng.uniform(-2, 2, size=3) for _ in range(5)]
        report = check_gradients(problem, points)
        assert report.max_rel_error <= 1e-6

    def test_expression_backed_problem(self):
        problem = problem_from_dict(
            {
                "n": 2,
                "m": 1,
                "k": 1,
                "scenarios": [[0.5], [-0.5]],
                "objectives": ["sin(x1)*exp(p1*x2) + x1^2"],
            }
        )
        rng = np.random.default_rng(15)
        points = [rng.uniform(-1.5, 1.5, size=2) for _ in range(10)]
        report = check_gradients(problem, points)
        assert report.max_rel_error <= 1e-5

    def test_corrupted_gradient_flagged(self):
        def liar(x, xi):
            return float(x[0] ** 2), np.array([2.0 * x[0] + 0.3])

        problem = ProblemInstance(
            n=1,
            m=1,
            scenario_set=ScenarioSet(np.array([[0.0]])),
            objectives=[liar],
        )
        report = check_gradients(problem, [np.array([1.0])])
        assert report.max_rel_error >= 1e-2
        assert report.worst == (0, 0, 0)


class TestSummability:
    def test_two_scenario_bound_holds(self):
        problem, trace = converged_trace("two_scenario_1d", [0.0], beta=0.1)
        y_hat = evaluate_robust(problem, problem.known_solution).phi
        report = check_summability(trace, beta=0.1, y_hat=y_hat)
        assert report.all_hold
        assert report.partial_sum <= report.bounds[0] + 1e-8

    def test_single_record_trivially_holds(self):
        problem, trace = converged_trace("two_scenario_1d", [1.0])
        report = check_summability(trace, beta=0.1, y_hat=np.array([0.0]))
        assert report.partial_sum == 0.0
        assert report.all_hold

    def test_bad_lower_bound_rejected(self):
        problem, trace = converged_trace("two_scenario_1d", [0.0])
        with pytest.raises(ValueError, match="lower bound"):
            check_summability(trace, beta=0.1, y_hat=np.array([100.0]))

    def test_constant_trace_rejected(self):
        problem = get_builtin("biobj_quad_2d")
        trace = run(
            problem,
            np.array([1.0, 1.0]),
            SolverConfig(step_mode="constant", alpha=0.5, epsilon=1e-8),
        )
        with pytest.raises(ValueError, match="backtracking"):
            check_summability(trace, beta=0.1, y_hat=np.zeros(2))
