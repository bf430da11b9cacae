import numpy as np
import pytest

from helpers import random_quadratic

from robustdescent.problems import (
    EvaluationError,
    ProblemInstance,
    ScenarioSet,
    builtin_problems,
    evaluate_robust,
    get_builtin,
    make_quadratic_problem,
)


class TestEvaluateRobust:
    def test_two_scenario_split(self):
        problem = get_builtin("two_scenario_1d")
        ev = evaluate_robust(problem, np.array([0.0]), active_tolerance=0.0)
        assert ev.values.tolist() == [[0.0, 4.0]]
        assert ev.phi.tolist() == [4.0]
        assert ev.active_sets == ((1,),)

    def test_singleton_scenario(self):
        problem = make_quadratic_problem(
            Q=[[np.array([[2.0]])]], b=[[np.array([1.0])]], c=[[0.5]]
        )
        ev = evaluate_robust(problem, np.array([3.0]))
        assert ev.phi[0] == ev.values[0, 0]
        assert ev.active_sets == ((0,),)

    def test_tie_point_keeps_both_indices(self):
        problem = get_builtin("two_scenario_1d")
        ev = evaluate_robust(problem, np.array([1.0]), active_tolerance=0.0)
        assert ev.values.tolist() == [[1.0, 1.0]]
        assert ev.phi.tolist() == [1.0]
        assert ev.active_sets == ((0, 1),)

    def test_phi_dominates_values(self):
        rng = np.random.default_rng(7)
        problem = random_quadratic(rng, n=3, m=2, p=3)
        for _ in range(5):
            x = rng.uniform(-2, 2, size=3)
            ev = evaluate_robust(problem, x)
            assert (ev.phi[:, None] >= ev.values).all()
            assert all(len(active) >= 1 for active in ev.active_sets)

    def test_deterministic(self):
        problem = get_builtin("biobj_quad_2d")
        x = np.array([0.3, -1.2])
        first = evaluate_robust(problem, x)
        second = evaluate_robust(problem, x)
        assert (first.values == second.values).all()
        assert (first.gradients == second.gradients).all()
        assert (first.phi == second.phi).all()
        assert first.active_sets == second.active_sets

    def test_nonfinite_aborts_with_indices(self):
        def bad(x, xi):
            return float("nan"), np.zeros(1)

        problem = ProblemInstance(
            n=1,
            m=1,
            scenario_set=ScenarioSet(np.array([[0.0]])),
            objectives=[bad],
        )
        with pytest.raises(EvaluationError) as info:
            evaluate_robust(problem, np.array([0.0]))
        assert info.value.objective == 0
        assert info.value.scenario == 0
        assert "objective 1, scenario 1" in str(info.value)

    def test_dimension_checked(self):
        problem = get_builtin("two_scenario_1d")
        with pytest.raises(ValueError):
            evaluate_robust(problem, np.array([0.0, 1.0]))


class TestQuadraticFamily:
    def test_scalar_gradient(self):
        problem = make_quadratic_problem(
            Q=[[np.array([[2.0]])]], b=[[np.array([0.0])]], c=[[0.0]]
        )
        value, grad = problem.objectives[0](np.array([3.0]), np.array([0.0]))
        assert value == 9.0
        assert grad.tolist() == [6.0]

    def test_linear_objective_constant_gradient(self):
        problem = make_quadratic_problem(
            Q=[[np.zeros((2, 2))]], b=[[np.ones(2)]], c=[[0.0]]
        )
        _, g1 = problem.objectives[0](np.array([0.0, 0.0]), np.array([0.0]))
        _, g2 = problem.objectives[0](np.array([5.0, -3.0]), np.array([0.0]))
        assert g1.tolist() == [1.0, 1.0]
        assert g2.tolist() == [1.0, 1.0]
        assert problem.smoothness_constant is None

    def test_two_scenario_expansion(self):
        # (x-2)^2 expanded: Q=2, b=-4, c=4
        problem = make_quadratic_problem(
            Q=[[np.array([[2.0]]), np.array([[2.0]])]],
            b=[[np.array([0.0]), np.array([-4.0])]],
            c=[[0.0, 4.0]],
        )
        ev = evaluate_robust(problem, np.array([0.0]))
        assert ev.values.tolist() == [[0.0, 4.0]]

    def test_asymmetric_rejected(self):
        Q = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            make_quadratic_problem(Q=[[Q]], b=[[np.zeros(2)]], c=[[0.0]])

    def test_constants_from_eigenvalues(self):
        problem = get_builtin("two_scenario_1d")
        assert problem.smoothness_constant == 2.0
        assert problem.strong_convexity_modulus == 2.0

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(11)
        problem = random_quadratic(rng, n=3, m=2, p=2)
        scenarios = problem.scenario_set.scenarios
        for _ in range(10):
            x = rng.uniform(-3, 3, size=3)
            h = 1e-6 * (1.0 + np.linalg.norm(x))
            for j, objective in enumerate(problem.objectives):
                for i in range(problem.p):
                    _, grad = objective(x, scenarios[i])
                    fd = np.empty(3)
                    for d in range(3):
                        xp, xm = x.copy(), x.copy()
                        xp[d] += h
                        xm[d] -= h
                        fd[d] = (
                            objective(xp, scenarios[i])[0]
                            - objective(xm, scenarios[i])[0]
                        ) / (2 * h)
                    rel = np.abs(fd - grad).max() / (1.0 + np.abs(grad).max())
                    assert rel <= 1e-6


class TestBuiltinRegistry:
    def test_contains_required_instances(self):
        registry = builtin_problems()
        for name in ("two_scenario_1d", "biobj_quad_2d", "nonconvex_demo"):
            assert name in registry

    def test_unknown_name(self):
        with pytest.raises(KeyError, match="unknown builtin"):
            get_builtin("")

    def test_two_scenario_known_minimizer(self):
        problem = get_builtin("two_scenario_1d")
        assert problem.known_solution.tolist() == [1.0]
        # independent 1-D grid confirmation of min max{x^2, (x-2)^2}
        grid = np.linspace(-3.0, 4.0, 70001)
        phi = np.maximum(grid**2, (grid - 2.0) ** 2)
        assert abs(grid[phi.argmin()] - 1.0) <= 1e-3

    def test_biobj_known_minimizer_against_grid(self):
        problem = get_builtin("biobj_quad_2d")
        star = problem.known_solution

        def grid_argmin(center, half, points):
            axis0 = np.linspace(center[0] - half, center[0] + half, points)
            axis1 = np.linspace(center[1] - half, center[1] + half, points)
            grid = np.stack(
                np.meshgrid(axis0, axis1, indexing="ij"), -1
            ).reshape(-1, 2)
            phis = np.array(
                [evaluate_robust(problem, point).phi for point in grid]
            )
            return [grid[phis[:, j].argmin()] for j in range(2)]

        # coarse sweep over a wide box, then a fine sweep at 1e-3 spacing
        coarse = grid_argmin(star + 0.137, 1.2, 121)
        for j in range(2):
            fine = grid_argmin(coarse[j], 0.05, 101)[j]
            # both worst-case objectives are minimized at the same point
            assert np.abs(fine - star).max() <= 1e-3

    def test_nonconvex_demo_is_nonconvex_but_smooth(self):
        problem = get_builtin("nonconvex_demo")
        assert problem.smoothness_constant is None
        # second difference changes sign along the axis: nonconvex
        value = lambda t: evaluate_robust(problem, np.array([t])).values[0, 0]
        second = lambda t, h=1e-3: value(t + h) - 2 * value(t) + value(t - h)
        assert second(0.0) < 0 < second(1.5)
