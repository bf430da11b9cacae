import numpy as np
import pytest

from robustdescent.problems import evaluate_robust, get_builtin, make_quadratic_problem
from robustdescent.subproblem import (
    assemble,
    project_simplex,
    solve,
    solve_dual,
)

from helpers import random_quadratic


class TestAssemble:
    def test_two_scenario_at_zero(self):
        problem = get_builtin("two_scenario_1d")
        data = assemble(evaluate_robust(problem, np.array([0.0])))
        assert data.columns.ravel().tolist() == [0.0, -4.0]
        assert data.offsets.tolist() == [-4.0, 0.0]
        assert data.index_map == ((0, 0), (0, 1))

    def test_singleton(self):
        problem = make_quadratic_problem(
            Q=[[np.array([[1.0]])]], b=[[np.array([0.0])]], c=[[0.0]]
        )
        data = assemble(evaluate_robust(problem, np.array([2.0])))
        assert data.columns.shape == (1, 1)
        assert data.offsets.tolist() == [0.0]

    def test_two_scenario_at_tie(self):
        problem = get_builtin("two_scenario_1d")
        data = assemble(evaluate_robust(problem, np.array([1.0])))
        assert data.columns.ravel().tolist() == [2.0, -2.0]
        assert data.offsets.tolist() == [0.0, 0.0]

    def test_order_is_objective_major(self):
        rng = np.random.default_rng(3)
        problem = random_quadratic(rng, n=2, m=2, p=3)
        ev = evaluate_robust(problem, np.zeros(2))
        data = assemble(ev)
        assert data.index_map == tuple(
            (j, i) for j in range(2) for i in range(3)
        )
        for row, (j, i) in enumerate(data.index_map):
            assert (data.columns[row] == ev.gradients[j, i]).all()
            assert data.offsets[row] == ev.values[j, i] - ev.phi[j]


class TestProjectSimplex:
    def test_already_feasible(self):
        assert project_simplex(np.array([0.5, 0.5])).tolist() == [0.5, 0.5]

    def test_symmetry(self):
        assert project_simplex(np.array([1.0, 1.0])).tolist() == [0.5, 0.5]

    def test_clipping(self):
        assert project_simplex(np.array([2.0, 0.0])).tolist() == [1.0, 0.0]

    def test_invariants_on_random_inputs(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            v = rng.normal(scale=rng.uniform(0.1, 10), size=rng.integers(1, 12))
            w = project_simplex(v)
            assert (w >= 0).all()
            assert w.sum() == pytest.approx(1.0, abs=1e-15)

    def test_matches_exhaustive_candidate_set(self):
        # the projection is the best among all clip-at-threshold candidates
        rng = np.random.default_rng(6)
        for _ in range(50):
            v = rng.normal(size=4)
            w = project_simplex(v)
            best = None
            for threshold in np.linspace(v.min() - 1.5, v.max() + 0.5, 4001):
                cand = np.maximum(v - threshold, 0.0)
                total = cand.sum()
                if total <= 0:
                    continue
                cand /= total
                dist = ((cand - v) ** 2).sum()
                if best is None or dist < best:
                    best = dist
            assert ((w - v) ** 2).sum() <= best + 1e-6


class TestSolveDual:
    def test_two_scenario_at_zero(self):
        problem = get_builtin("two_scenario_1d")
        sub = solve(problem, np.array([0.0]))
        assert sub.lam == pytest.approx([0.75, 0.25], abs=1e-10)
        assert sub.direction[0] == pytest.approx(1.0, abs=1e-10)
        assert sub.theta == pytest.approx(-3.5, abs=1e-10)
        assert sub.rho == pytest.approx(-4.0, abs=1e-10)
        assert sub.certified

    def test_two_scenario_at_tie(self):
        problem = get_builtin("two_scenario_1d")
        sub = solve(problem, np.array([1.0]))
        assert sub.lam == pytest.approx([0.5, 0.5], abs=1e-10)
        assert sub.direction[0] == pytest.approx(0.0, abs=1e-12)
        assert sub.theta == pytest.approx(0.0, abs=1e-12)

    def test_single_piece_reduces_to_negative_gradient(self):
        problem = make_quadratic_problem(
            Q=[[np.eye(2)]], b=[[np.zeros(2)]], c=[[0.0]]
        )
        sub = solve(problem, np.array([1.0, 0.0]))
        assert sub.lam.tolist() == [1.0]
        assert sub.direction == pytest.approx([-1.0, 0.0], abs=1e-12)
        assert sub.theta == pytest.approx(-0.5, abs=1e-12)

    def test_criticality_dichotomy(self):
        problem = get_builtin("two_scenario_1d")
        critical = solve(problem, np.array([1.0]))
        assert abs(critical.theta) <= 1e-8
        for start in (-2.0, 0.0, 0.5, 3.0):
            sub = solve(problem, np.array([start]))
            assert sub.theta < -1e-8

    def test_kkt_and_inequalities_on_random_instances(self):
        rng = np.random.default_rng(42)
        tol = 1e-8
        for _ in range(50):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 3))
            p = int(rng.integers(1, 5))
            if m * p > 8:
                continue
            problem = random_quadratic(rng, n=n, m=m, p=p)
            x = rng.uniform(-2, 2, size=n)
            sub = solve(problem, x, tol=tol)
            assert sub.certified
            assert sub.kkt_residual <= tol
            assert sub.lam.min() >= 0.0
            assert sub.lam.sum() == pytest.approx(1.0, abs=1e-12)
            tnorm2 = float(sub.direction @ sub.direction)
            assert sub.theta <= -0.5 * tnorm2 + tol
            assert sub.rho <= -tnorm2 + tol
            # theta recomputed from primal quantities equals the dual value
            assert sub.theta == pytest.approx(sub.dual_value, abs=10 * tol)

    def test_direction_is_negated_multiplier_combination(self):
        rng = np.random.default_rng(9)
        problem = random_quadratic(rng, n=2, m=2, p=2)
        x = np.array([0.7, -1.1])
        data = assemble(evaluate_robust(problem, x))
        sub = solve_dual(data)
        recombined = -data.columns.T @ sub.lam
        assert sub.direction == pytest.approx(recombined, abs=1e-12)

    def test_monotone_dual_objective(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            problem = random_quadratic(rng, n=2, m=2, p=3)
            x = rng.uniform(-2, 2, size=2)
            sub = solve(problem, x)
            history = sub.dual_objective_history
            scale = 1.0 + np.abs(history).max()
            assert (np.diff(history) >= -1e-12 * scale).all()

    def test_repeated_solves_agree(self):
        problem = get_builtin("biobj_quad_2d")
        x = np.array([2.0, -1.0])
        tol = 1e-8
        first = solve(problem, x, tol=tol)
        second = solve(problem, x, tol=tol)
        assert np.abs(first.direction - second.direction).max() <= 10 * tol
        assert abs(first.theta - second.theta) <= 10 * tol

    def test_descent_property(self):
        # a small step along the direction strictly decreases every phi_j
        rng = np.random.default_rng(23)
        for _ in range(10):
            problem = random_quadratic(rng, n=2, m=2, p=2)
            x = rng.uniform(-2, 2, size=2)
            sub = solve(problem, x)
            if sub.theta >= -1e-8:
                continue
            phi0 = evaluate_robust(problem, x).phi
            phi1 = evaluate_robust(problem, x + 1e-3 * sub.direction).phi
            assert (phi1 < phi0).all()

    def test_primal_dual_consistency(self):
        # dual optimum equals theta recomputed via the primal formula
        rng = np.random.default_rng(31)
        tol = 1e-8
        for _ in range(50):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 3))
            p = int(rng.integers(1, 4))
            problem = random_quadratic(rng, n=n, m=m, p=p)
            x = rng.uniform(-2, 2, size=n)
            data = assemble(evaluate_robust(problem, x))
            sub = solve_dual(data, tol=tol)
            t = sub.direction
            vartheta = float((data.offsets + data.columns @ t).max())
            assert sub.theta == pytest.approx(vartheta + 0.5 * t @ t, abs=1e-12)
            assert sub.theta == pytest.approx(sub.dual_value, abs=10 * tol)

    def test_bad_tol_rejected(self):
        problem = get_builtin("two_scenario_1d")
        data = assemble(evaluate_robust(problem, np.array([0.0])))
        with pytest.raises(ValueError):
            solve_dual(data, tol=0.0)
