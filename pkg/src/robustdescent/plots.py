"""Figure rendering for solver traces.

Renders the standard convergence views of a trace to image files next to
the delimited output: worst-case objective values per iteration, the
stopping quantities |theta| and ||t|| on a log scale, and, when a reference
solution is available, the distance decay with the predicted contraction
slope for constant-step runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .problems import ProblemInstance
from .solver import SolverTrace

__all__ = ["render_trace_figures", "write_plot_data"]


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trace_figures(
    trace: SolverTrace,
    out_dir: str | Path,
    problem: ProblemInstance | None = None,
    stem: str = "trace",
) -> list:
    """Render convergence figures for a trace; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = np.arange(len(trace))
    written = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    eps = np.finfo(float).tiny
    ax.semilogy(ks, np.maximum(np.abs(trace.thetas), eps), label=r"$|\Theta(x^k)|$")
    ax.semilogy(ks, np.maximum(trace.direction_norms, eps), label=r"$\|t^k\|$")
    ax.set_xlabel("iteration k")
    ax.set_title(f"{trace.problem_name or stem}: stopping quantities")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    written.append(_save(fig, out_dir / f"{stem}_convergence.png"))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    phis = trace.phis
    for j in range(phis.shape[1]):
        ax.plot(ks, phis[:, j], label=rf"$\Phi_{{{j + 1}}}(x^k)$")
    ax.set_xlabel("iteration k")
    ax.set_title(f"{trace.problem_name or stem}: worst-case objectives")
    ax.legend()
    ax.grid(True, alpha=0.3)
    written.append(_save(fig, out_dir / f"{stem}_objectives.png"))

    x_star = problem.known_solution if problem is not None else None
    if x_star is not None:
        dist = np.linalg.norm(trace.xs - x_star, axis=1)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.semilogy(ks, np.maximum(dist, eps), label=r"$\|x^k - x^*\|$")
        config = trace.config
        mu = problem.strong_convexity_modulus
        if (
            config is not None
            and config.step_mode == "constant"
            and mu is not None
            and dist[0] > 0
        ):
            factor = max(1.0 - mu * float(config.alpha), eps)
            ax.semilogy(
                ks,
                dist[0] * factor ** (ks / 2.0),
                "--",
                label=rf"$(1 - \mu\alpha)^{{k/2}}$ slope",
            )
        ax.set_xlabel("iteration k")
        ax.set_title(f"{trace.problem_name or stem}: distance to reference")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        written.append(_save(fig, out_dir / f"{stem}_distance.png"))
    return written


def write_plot_data(
    trace: SolverTrace,
    path: str | Path,
    problem: ProblemInstance | None = None,
) -> Path:
    """Emit plot-ready columns (log scales precomputed) as CSV."""
    path = Path(path)
    x_star = problem.known_solution if problem is not None else None
    header = ["k", "abs_theta", "log10_abs_theta", "tnorm", "alpha"]
    phis = trace.phis
    header += [f"phi{j + 1}" for j in range(phis.shape[1])]
    if x_star is not None:
        header += ["dist", "log10_dist"]
    lines = [",".join(header)]
    for idx, record in enumerate(trace.records):
        abs_theta = abs(record.theta)
        row = [
            str(record.k),
            format(abs_theta, ".17g"),
            format(np.log10(abs_theta) if abs_theta > 0 else -np.inf, ".17g"),
            format(record.direction_norm, ".17g"),
            format(record.alpha, ".17g"),
        ]
        row += [format(v, ".17g") for v in record.phi]
        if x_star is not None:
            dist = float(np.linalg.norm(record.x - x_star))
            row += [
                format(dist, ".17g"),
                format(np.log10(dist) if dist > 0 else -np.inf, ".17g"),
            ]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path
