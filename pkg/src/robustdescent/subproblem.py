"""Direction-finding subproblem at a point x.

The robust steepest-descent direction minimizes

    max_{j,i} { f_j(x, xi_i) + grad f_j(x, xi_i)' t - Phi_j(x) }  +  0.5 ||t||^2

over t.  Writing g_l for the stacked gradients and a_l for the nonpositive
offsets f - Phi, the dual is a quadratic program over the probability
simplex,

    min_{lam in simplex}  0.5 ||G' lam||^2 - a' lam,

whose solution recovers t = -G' lam.  The solver is a projected-gradient
iteration with Barzilai-Borwein steps, a monotone safeguard, and an
active-set face descent that finishes faces exactly; the returned
certificate is the full KKT residual, with rho always recovered primally as
max_l (a_l + g_l' t) so complementarity is measured, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemInstance, RobustEvaluation, evaluate_robust

__all__ = [
    "SubproblemData",
    "SubproblemSolution",
    "assemble",
    "project_simplex",
    "solve_dual",
    "solve",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class SubproblemData:
    """Stacked constraint rows of the direction subproblem at one point.

    Row l of ``columns`` is grad f_j(x, xi_i) and offsets[l] = f_j(x, xi_i)
    - Phi_j(x) <= 0, with l running j-major, i-minor; index_map[l] = (j, i)
    in 0-based indices.
    """

    columns: np.ndarray  # (K, n)
    offsets: np.ndarray  # (K,)
    index_map: tuple  # K pairs (j, i)


@dataclass
class SubproblemSolution:
    """Direction t, gap theta, simplex multipliers and KKT certificate."""

    direction: np.ndarray
    theta: float
    lam: np.ndarray
    rho: float
    kkt_residual: float
    dual_value: float
    iterations: int
    certified: bool
    dual_objective_history: np.ndarray  # maximized dual objective per iteration


def assemble(evaluation: RobustEvaluation) -> SubproblemData:
    """Stack an evaluation into K = m*p rows in deterministic (j, i) order."""
    m, p, n = evaluation.gradients.shape
    columns = evaluation.gradients.reshape(m * p, n)
    offsets = (evaluation.values - evaluation.phi[:, None]).reshape(m * p)
    index_map = tuple((j, i) for j in range(m) for i in range(p))
    return SubproblemData(
        columns=columns.copy(), offsets=offsets.copy(), index_map=index_map
    )


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("v must be a nonempty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / np.arange(1, v.size + 1) > 0)[0][-1]
    shift = (1.0 - css[rho]) / (rho + 1.0)
    w = np.maximum(v + shift, 0.0)
    return w / w.sum()


def _kkt_residual(columns: np.ndarray, offsets: np.ndarray, lam: np.ndarray) -> float:
    """Max violation over simplex feasibility, stationarity, primal
    feasibility and complementarity, with t and rho recovered primally."""
    t = -columns.T @ lam
    slack = offsets + columns @ t
    rho = slack.max()
    # stationarity ||t + G'lam|| and feasibility max(a + g't - rho) vanish by
    # construction; they are kept explicit so the certificate stays honest
    # against future refactors.
    stationarity = float(np.abs(t + columns.T @ lam).max()) if t.size else 0.0
    feasibility = float(np.maximum(slack - rho, 0.0).max())
    complementarity = float(np.abs(lam * (slack - rho)).max())
    return max(
        abs(float(lam.sum()) - 1.0),
        max(0.0, -float(lam.min())),
        stationarity,
        feasibility,
        complementarity,
    )


def _face_solve(H: np.ndarray, a: np.ndarray, S: list) -> tuple | None:
    """Minimize the dual objective on the affine face supp(lam) = S.

    Returns (mu_S, nu) with nu the multiplier of the sum-to-one constraint,
    or None when no useful direction exists.  Inconsistent systems (face
    minimum unbounded along a kernel ray) fall back to a tiny Tikhonov term:
    the segment toward the regularized point still descends the true
    objective, and the caller's clamp makes the move finite.
    """
    r = len(S)
    kkt = np.zeros((r + 1, r + 1))
    kkt[:r, :r] = H[np.ix_(S, S)]
    kkt[:r, r] = 1.0
    kkt[r, :r] = 1.0
    rhs = np.concatenate([a[S], [1.0]])
    scale = max(1.0, float(np.abs(rhs).max()))
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if np.isfinite(sol).all():
        # iterative refinement: near-singular consistent systems otherwise
        # leave an equation residual that leaks into the KKT certificate
        for _ in range(3):
            residual = rhs - kkt @ sol
            if np.abs(residual).max() <= 1e-14 * scale:
                break
            correction, *_ = np.linalg.lstsq(kkt, residual, rcond=None)
            if not np.isfinite(correction).all():
                break
            sol = sol + correction
        if np.abs(kkt @ sol - rhs).max() <= 1e-11 * scale:
            return sol[:r], float(sol[r])
    eps = 1e-10 * max(1.0, float(np.trace(kkt[:r, :r])) / r)
    kkt[:r, :r] += eps * np.eye(r)
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.isfinite(sol).all():
        return None
    return sol[:r], float(sol[r])


def _active_set_pass(H: np.ndarray, a: np.ndarray, lam: np.ndarray, obj) -> np.ndarray:
    """One primal active-set sweep from a feasible point; monotone in obj
    up to evaluation noise.

    Alternates exact face solves with clamping at coordinate zero crossings
    (dropping the blocking index) and multiplier pricing (adding the most
    violated index).  Finite: each cycle changes the working set.  Near the
    optimum the true improvement drops below the rounding noise of the
    objective itself, so candidates within a data-scaled noise band are
    accepted; the KKT residual stays the certificate.
    """
    K = len(lam)
    lam = lam.copy()
    f = obj(lam)
    noise = 1e-13 * (1.0 + abs(f) + float(np.abs(H).max()))
    S = list(np.nonzero(lam > 1e-14)[0])
    if not S:
        S = [int(np.argmax(lam))]
    for _ in range(4 * K + 8):
        fs = _face_solve(H, a, S)
        if fs is None:
            return lam
        mu_S, nu = fs
        if (mu_S >= -1e-13).all():
            cand = np.zeros(K)
            cand[S] = np.maximum(mu_S, 0.0)
            total = cand.sum()
            if total <= 0.0:
                return lam
            cand /= total
            fc = obj(cand)
            if fc > f + noise:
                return lam
            lam, f = cand, fc
            outside = [l for l in range(K) if l not in S]
            if not outside:
                return lam
            eta = (H @ lam - a) - nu
            emin = min(eta[l] for l in outside)
            lmin = min(l for l in outside if eta[l] == emin)
            if emin >= -1e-12 * max(1.0, float(np.abs(eta).max())):
                return lam
            S.append(int(lmin))
            S.sort()
            continue
        # infeasible face minimizer: clamp along the segment, drop the blocker
        idx = np.asarray(S)
        lam_S = lam[idx]
        d = mu_S - lam_S
        crossing = mu_S < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = np.where(
                crossing, lam_S / np.maximum(lam_S - mu_S, 1e-300), np.inf
            )
        blocker = int(np.argmin(steps))
        theta = float(min(1.0, steps[blocker]))
        new_S = np.maximum(lam_S + theta * d, 0.0)
        new_S[blocker] = 0.0
        cand = np.zeros(K)
        cand[idx] = new_S
        total = cand.sum()
        if total <= 0.0:
            return lam
        cand /= total
        fc = obj(cand)
        if fc > f + noise:
            return lam
        lam, f = cand, fc
        S.pop(blocker)
        if not S:
            return lam
    return lam


def solve_dual(
    data: SubproblemData, tol: float = DEFAULT_TOL, max_iter: int | None = None
) -> SubproblemSolution:
    """Solve the simplex-constrained dual QP and recover the direction.

    Parameters
    ----------
    data : SubproblemData
    tol : target for the KKT residual (> 0)
    max_iter : iteration cap; default 10*K*n + 1000

    Returns
    -------
    SubproblemSolution
        ``certified`` is False when the cap was reached (or progress
        stalled at machine precision) with residual still above tol; the
        best iterate found is returned either way.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    columns, offsets = data.columns, data.offsets
    K, n = columns.shape
    if max_iter is None:
        max_iter = 10 * K * n + 1000
    H = columns @ columns.T
    lipschitz = max(float(np.linalg.eigvalsh(H).max()), 1e-16)

    def obj(lam: np.ndarray) -> float:
        return 0.5 * lam @ H @ lam - offsets @ lam

    lam = np.full(K, 1.0 / K)
    f = obj(lam)
    g = H @ lam - offsets
    noise = 1e-13 * (1.0 + abs(f) + float(np.abs(H).max()))
    history = [-f]
    prev_lam = prev_g = None
    best_lam = lam
    best_residual = np.inf
    stagnant = 0
    iterations = 0
    for iterations in range(max_iter):
        residual = _kkt_residual(columns, offsets, lam)
        if residual < best_residual - 1e-18:
            best_residual = residual
            best_lam = lam
            stagnant = 0
        else:
            stagnant += 1
        if best_residual <= tol or stagnant >= 50:
            break
        polished = _active_set_pass(H, offsets, lam, obj)
        fp = obj(polished)
        if fp <= f + noise and not np.array_equal(polished, lam):
            lam, f = polished, fp
            g = H @ lam - offsets
            prev_lam = prev_g = None
            history.append(-f)
            continue
        if prev_lam is None:
            step = 1.0 / lipschitz
        else:
            s = lam - prev_lam
            y = g - prev_g
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 1e-30 else 1.0 / lipschitz
            step = float(np.clip(step, 1e-12, 1e12))
        cand = project_simplex(lam - step * g)
        fc = obj(cand)
        if fc > f:
            cand = project_simplex(lam - g / lipschitz)
            fc = obj(cand)
            if fc > f or np.array_equal(cand, lam):
                break  # stalled at floating-point resolution
        if f - fc <= 1e-16 * (1.0 + abs(f)):
            break  # neither the face pass nor the gradient step can progress
        prev_lam, prev_g = lam, g
        lam, f = cand, fc
        g = H @ lam - offsets
        history.append(-f)
    else:
        iterations = max_iter

    lam = best_lam
    direction = -columns.T @ lam
    slack = offsets + columns @ direction
    rho = float(slack.max())
    theta = rho + 0.5 * float(direction @ direction)
    residual = _kkt_residual(columns, offsets, lam)
    return SubproblemSolution(
        direction=direction,
        theta=theta,
        lam=lam,
        rho=rho,
        kkt_residual=residual,
        dual_value=float(offsets @ lam) - 0.5 * float(direction @ direction),
        iterations=iterations,
        certified=residual <= tol,
        dual_objective_history=np.asarray(history),
    )


def solve(
    problem: ProblemInstance,
    x: np.ndarray,
    tol: float = DEFAULT_TOL,
    active_tolerance: float | None = None,
    max_iter: int | None = None,
) -> SubproblemSolution:
    """Evaluate the problem at x and solve the direction subproblem there.

    The primal objective is strongly convex, so the direction is unique;
    repeated solves agree regardless of dual multiplier non-uniqueness.
    """
    evaluation = evaluate_robust(problem, x, active_tolerance)
    return solve_dual(assemble(evaluation), tol=tol, max_iter=max_iter)
