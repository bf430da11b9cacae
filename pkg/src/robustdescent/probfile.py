"""Problem files: a flat TOML document describing an uncertain problem.

Schema::

    name = "my_problem"            # optional
    n = 2                          # decision variables
    m = 1                          # objectives
    k = 1                          # parameters per scenario
    scenarios = [[0.0], [2.0]]     # p rows of k reals
    objectives = ["(x1 - p1)^2"]   # m expression strings (see expr grammar)
    gamma = 2.0                    # optional smoothness constant
    mu = 2.0                       # optional strong-convexity modulus
    known_solution = [1.0]         # optional

Objective strings use the expression grammar from :mod:`robustdescent.expr`
verbatim; gradients come from its forward-mode evaluation.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expr import ExpressionError, ExpressionProgram, eval_grad, parse
from .problems import ProblemInstance, ScenarioSet

__all__ = ["ProblemFormatError", "load_problem", "problem_from_dict"]


class ProblemFormatError(ValueError):
    """Malformed problem file; message carries file/field context."""


def _require(data: dict, key: str, kind, context: str):
    if key not in data:
        raise ProblemFormatError(f"{context}: missing required key {key!r}")
    value = data[key]
    if kind is int and isinstance(value, bool):
        raise ProblemFormatError(f"{context}: key {key!r} must be an integer")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ProblemFormatError(
            f"{context}: key {key!r} has type {type(value).__name__}"
        )
    return value


def _expression_objective(program: ExpressionProgram):
    def objective(x: np.ndarray, xi: np.ndarray):
        return eval_grad(program, x, xi)

    return objective


def problem_from_dict(data: dict, context: str = "problem") -> ProblemInstance:
    """Build a ProblemInstance from a parsed problem document."""
    n = _require(data, "n", int, context)
    m = _require(data, "m", int, context)
    k = _require(data, "k", int, context)
    if n < 1 or m < 1 or k < 0:
        raise ProblemFormatError(f"{context}: need n >= 1, m >= 1, k >= 0")

    rows = _require(data, "scenarios", list, context)
    if not rows:
        raise ProblemFormatError(f"{context}: need at least one scenario row")
    scen = []
    for idx, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != k:
            raise ProblemFormatError(
                f"{context}: scenario row {idx + 1} must hold {k} reals"
            )
        scen.append([float(v) for v in row])
    scenarios = np.asarray(scen, dtype=float).reshape(len(scen), k)

    texts = _require(data, "objectives", list, context)
    if len(texts) != m:
        raise ProblemFormatError(
            f"{context}: expected {m} objective expressions, got {len(texts)}"
        )
    objectives = []
    for j, text in enumerate(texts):
        if not isinstance(text, str):
            raise ProblemFormatError(f"{context}: objective {j + 1} must be a string")
        try:
            program = parse(text, n, k)
        except ExpressionError as exc:
            raise ProblemFormatError(
                f"{context}: objective {j + 1} does not parse: {exc}"
            ) from exc
        objectives.append(_expression_objective(program))

    gamma = data.get("gamma")
    mu = data.get("mu")
    known = data.get("known_solution")
    if known is not None:
        if not isinstance(known, list) or len(known) != n:
            raise ProblemFormatError(f"{context}: known_solution must hold {n} reals")
        known = np.asarray([float(v) for v in known])
    try:
        return ProblemInstance(
            n=n,
            m=m,
            scenario_set=ScenarioSet(scenarios),
            objectives=objectives,
            smoothness_constant=float(gamma) if gamma is not None else None,
            strong_convexity_modulus=float(mu) if mu is not None else None,
            known_solution=known,
            name=str(data.get("name", "")),
            description=str(data.get("description", "")),
        )
    except ValueError as exc:
        raise ProblemFormatError(f"{context}: {exc}") from exc


def load_problem(path: str | Path) -> ProblemInstance:
    """Read and validate a TOML problem file."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ProblemFormatError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc
    problem = problem_from_dict(data, context=str(path))
    if not problem.name:
        problem = ProblemInstance(
            n=problem.n,
            m=problem.m,
            scenario_set=problem.scenario_set,
            objectives=problem.objectives,
            smoothness_constant=problem.smoothness_constant,
            strong_convexity_modulus=problem.strong_convexity_modulus,
            known_solution=problem.known_solution,
            name=path.stem,
            description=problem.description,
        )
    return problem
