"""Trace files: CSV rows with a '#'-prefixed metadata header.

Layout::

    # robustdescent trace v1
    # problem: two_scenario_1d
    # n: 1
    # m: 1
    # mode: armijo
    # epsilon: 1e-08
    # beta: 0.1
    # alpha:
    # max_iterations: 10000
    # termination: converged
    k,x1,phi1,theta,tnorm,alpha,ls_trials
    0,...

All floating-point columns are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .solver import IterationRecord, SolverConfig, SolverTrace

__all__ = ["TraceFormatError", "write_trace", "read_trace", "FORMAT_TAG"]

FORMAT_TAG = "robustdescent trace v1"


class TraceFormatError(ValueError):
    """Malformed trace file."""


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_trace(trace: SolverTrace, path: str | Path) -> None:
    """Write a solver trace; see the module docstring for the layout."""
    if not trace.records:
        raise ValueError("refusing to write an empty trace")
    n = trace.records[0].x.size
    m = trace.records[0].phi.size
    config = trace.config if trace.config is not None else SolverConfig()
    lines = [
        f"# {FORMAT_TAG}",
        f"# problem: {trace.problem_name}",
        f"# n: {n}",
        f"# m: {m}",
        f"# mode: {config.step_mode}",
        f"# epsilon: {_fmt(config.epsilon)}",
        f"# beta: {_fmt(config.beta)}",
        f"# alpha: {_fmt(config.alpha) if config.alpha is not None else ''}",
        f"# max_iterations: {config.max_iterations}",
        f"# termination: {trace.termination}",
    ]
    header = (
        ["k"]
        + [f"x{d + 1}" for d in range(n)]
        + [f"phi{j + 1}" for j in range(m)]
        + ["theta", "tnorm", "alpha", "ls_trials"]
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for record in trace.records:
        writer.writerow(
            [record.k]
            + [_fmt(v) for v in record.x]
            + [_fmt(v) for v in record.phi]
            + [
                _fmt(record.theta),
                _fmt(record.direction_norm),
                _fmt(record.alpha),
                record.line_search_trials,
            ]
        )
    Path(path).write_text("\n".join(lines) + "\n" + buffer.getvalue())


def read_trace(path: str | Path) -> SolverTrace:
    """Read a trace file back into a SolverTrace.

    Directions and multipliers are not serialized, so the reconstructed
    records carry a zero direction vector and no multipliers; everything
    the trace-level diagnostics need (x, phi, theta, ||t||, alpha) is exact.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise TraceFormatError(f"{path}: no such file") from None
    meta: dict[str, str] = {}
    rows: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
        elif line.strip():
            rows.append(line)
    if FORMAT_TAG not in text.splitlines()[0]:
        raise TraceFormatError(f"{path}: missing format tag {FORMAT_TAG!r}")
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    try:
        n = int(meta["n"])
        m = int(meta["m"])
        mode = meta["mode"]
        epsilon = float(meta["epsilon"])
        beta = float(meta["beta"])
        alpha = float(meta["alpha"]) if meta.get("alpha") else None
        max_iterations = int(meta["max_iterations"])
        termination = meta["termination"]
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"{path}: bad metadata block: {exc}") from exc

    reader = csv.reader(rows)
    header = next(reader)
    expected = (
        ["k"]
        + [f"x{d + 1}" for d in range(n)]
        + [f"phi{j + 1}" for j in range(m)]
        + ["theta", "tnorm", "alpha", "ls_trials"]
    )
    if header != expected:
        raise TraceFormatError(f"{path}: unexpected column header {header}")

    records = []
    for row in reader:
        if len(row) != len(expected):
            raise TraceFormatError(f"{path}: row has {len(row)} fields")
        values = row[1:]
        x = np.array([float(v) for v in values[:n]])
        phi = np.array([float(v) for v in values[n : n + m]])
        theta, tnorm, alpha_k = (float(v) for v in values[n + m : n + m + 3])
        records.append(
            IterationRecord(
                k=int(row[0]),
                x=x,
                phi=phi,
                theta=theta,
                direction=np.zeros(n),
                direction_norm=tnorm,
                alpha=alpha_k,
                lam=None,
                line_search_trials=int(values[-1]),
            )
        )
    config = SolverConfig(
        epsilon=epsilon,
        beta=beta,
        max_iterations=max_iterations,
        step_mode=mode,
        alpha=alpha,
    )
    return SolverTrace(
        records=tuple(records),
        termination=termination,
        final_x=records[-1].x,
        problem_name=meta.get("problem", ""),
        config=config,
    )
