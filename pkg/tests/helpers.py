"""Shared fixtures for the test suite."""

import numpy as np

from robustdescent.problems import make_quadratic_problem


def random_quadratic(rng, n, m, p, convex=True):
    """Random quadratic instance; convex pieces are at least 0.3-strongly convex."""
    Q, b, c = [], [], []
    for _ in range(m):
        qrow, brow, crow = [], [], []
        for _ in range(p):
            A = rng.normal(size=(n, n))
            mat = A @ A.T / n + (0.3 * np.eye(n) if convex else -0.2 * np.eye(n))
            qrow.append(mat)
            brow.append(rng.normal(size=n))
            crow.append(float(rng.normal()))
        Q.append(qrow)
        b.append(brow)
        c.append(crow)
    return make_quadratic_problem(Q, b, c)
