# app/integrator.py
"""
Lattice propagation of the frame F = [phi, X_alpha, X_beta, xi].

Every edge uses the rational update

    F_new = F (I + t h (Omega + (h/2) Omega^2)),   t = 4 / (4 + h^2 nu^2),

with Omega taken at the start of the edge. For the two sparsity patterns of
Omega_1 / Omega_2 we have Omega^3 = -nu^2 Omega, and the update is then the
Cayley transform of h Omega / 2, so F stays orthogonal up to rounding.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import polar
from tqdm import tqdm

from .config import settings
from .connection import (
    CoefficientField,
    COEFF_NAMES,
    coeff_partials,
    conn_coeffs,
    omega1_matrix,
    omega2_matrix,
)
from .errors import DomainError, InsufficientResolutionError, PathOutOfGridError, ToleranceNotMetError
from .models import (
    ConnCoeffs,
    ConvergenceK,
    ConvergenceRow,
    ConvergenceStudy,
    GridSpec,
    LatticePath,
    Move,
    StepFactors,
)

logger = logging.getLogger(__name__)

Frame = np.ndarray  # (4, 4), columns [phi, X_alpha, X_beta, xi]
Point = Tuple[float, float]

_I4 = np.eye(4)


# ---------------------------------------------------------------------------
# Single steps
# ---------------------------------------------------------------------------


def cayley_factors(nu2: float, h: float) -> StepFactors:
    t = 4.0 / (4.0 + h * h * nu2)
    return StepFactors(s=2.0 * t - 1.0, t=t, nu2=nu2)


def step_matrix(om: np.ndarray, h: float, nu2: Optional[float] = None) -> np.ndarray:
    """I + t h (Omega + (h/2) Omega^2)."""
    if h == 0.0:
        return _I4.copy()
    if nu2 is None:
        nu2 = 0.5 * float(np.sum(om * om))
    t = 4.0 / (4.0 + h * h * nu2)
    return _I4 + (t * h) * (om + (0.5 * h) * (om @ om))


def cayley_step(frame: Frame, om: np.ndarray, h: float, nu2: Optional[float] = None) -> Frame:
    return frame @ step_matrix(om, h, nu2)


def step_x(
    frame: Frame,
    base: Point,
    dx: float,
    coeffs: CoefficientField = conn_coeffs,
) -> Frame:
    """Move the frame from base to (base.x + dx, base.y); dx may be negative."""
    x, y = base
    if not x > 0:
        raise DomainError(f"x-step base must satisfy x > 0, got {base}")
    c = coeffs(x, y)
    return cayley_step(frame, omega1_matrix(c), dx, c.nu1_sq)


def step_y(
    frame: Frame,
    base: Point,
    dy: float,
    coeffs: CoefficientField = conn_coeffs,
) -> Frame:
    x, y = base
    if not x > 0:
        raise DomainError(f"y-step base must satisfy x > 0, got {base}")
    c = coeffs(x, y)
    return cayley_step(frame, omega2_matrix(c), dy, c.nu2_sq)


def step_u(
    frame: Frame,
    base: Point,
    du: float,
    coeffs: CoefficientField = conn_coeffs,
) -> Frame:
    """Step in u = -log x: x goes to x * exp(-du)."""
    x, y = base
    if not x > 0:
        raise DomainError(f"u-step base must satisfy x > 0, got {base}")
    c = coeffs(x, y)
    return cayley_step(frame, -x * omega1_matrix(c), du, x * x * c.nu1_sq)


def orthogonality_defect(frame: Frame) -> float:
    return float(np.max(np.abs(frame.T @ frame - _I4)))


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


def propagate(
    path: LatticePath,
    grid: GridSpec,
    f0: Frame,
    coeffs: CoefficientField = conn_coeffs,
) -> Frame:
    """Compose full-width steps along a monotone lattice path from (x0, y0)."""
    frame = np.array(f0, dtype=float)
    i = j = 0
    for move in path.steps:
        if move == Move.RIGHT:
            if i + 1 > grid.n:
                raise PathOutOfGridError(f"path leaves the grid in x after {i} steps")
            x = grid.x_at(i)
            frame = step_x(frame, (x, grid.y_at(j)), grid.x_at(i + 1) - x, coeffs)
            i += 1
        else:
            if j + 1 > grid.n:
                raise PathOutOfGridError(f"path leaves the grid in y after {j} steps")
            y = grid.y_at(j)
            frame = step_y(frame, (grid.x_at(i), y), grid.y_at(j + 1) - y, coeffs)
            j += 1
    return frame


def _subdivisions(length: float, delta: float) -> int:
    if length <= 0.0:
        return 0
    return max(1, math.ceil(length / delta - 1e-9))


def _walk_x(frame: Frame, x0: float, x1: float, y: float, s: int, coeffs: CoefficientField) -> Frame:
    if s == 0:
        return frame
    h = (x1 - x0) / s
    for k in range(s):
        xk = x0 + k * h
        xn = x1 if k == s - 1 else x0 + (k + 1) * h
        frame = step_x(frame, (xk, y), xn - xk, coeffs)
    return frame


def _walk_y(frame: Frame, x: float, y0: float, y1: float, t: int, coeffs: CoefficientField) -> Frame:
    if t == 0:
        return frame
    h = (y1 - y0) / t
    for k in range(t):
        yk = y0 + k * h
        yn = y1 if k == t - 1 else y0 + (k + 1) * h
        frame = step_y(frame, (x, yk), yn - yk, coeffs)
    return frame


def canonical_frames(
    grid: GridSpec,
    target: Point,
    f0: Frame,
    coeffs: CoefficientField = conn_coeffs,
) -> Tuple[Frame, Frame]:
    """
    Frames at `target` along the x-first (underline) and y-first (overline)
    paths. The sub-rectangle [x0, xp] x [y0, yp] is re-divided into s and t
    equal pieces, s, t <= n, each no wider than delta.
    """
    xp, yp = target
    if not grid.contains(xp, yp):
        raise PathOutOfGridError(f"target {target} lies outside the grid")
    s = _subdivisions(xp - grid.x0, grid.delta)
    t = _subdivisions(yp - grid.y0, grid.delta)
    f0 = np.array(f0, dtype=float)

    lower = _walk_x(f0, grid.x0, xp, grid.y0, s, coeffs)
    lower = _walk_y(lower, xp, grid.y0, yp, t, coeffs)

    upper = _walk_y(f0, grid.x0, grid.y0, yp, t, coeffs)
    upper = _walk_x(upper, grid.x0, xp, yp, s, coeffs)
    return lower, upper


def plaquette_defect(
    base: Point,
    delta: float,
    f0: Optional[Frame] = None,
    coeffs: CoefficientField = conn_coeffs,
) -> float:
    """||F_underline - F_overline|| across one delta x delta square."""
    x, y = base
    frame = _I4 if f0 is None else np.asarray(f0, dtype=float)
    lower = step_y(step_x(frame, (x, y), delta, coeffs), (x + delta, y), delta, coeffs)
    upper = step_x(step_y(frame, (x, y), delta, coeffs), (x, y + delta), delta, coeffs)
    return float(np.linalg.norm(lower - upper))


def sweep_grid(
    grid: GridSpec,
    f0: Frame,
    workers: Optional[int] = None,
    coeffs: CoefficientField = conn_coeffs,
    progress: bool = False,
) -> np.ndarray:
    """
    Frames at every lattice point, shape (n+1, n+1, 4, 4) indexed [i, j].

    The column x = x0 is walked in y first; each row then runs in x from its
    column frame. Rows are independent, so the result does not depend on the
    worker count.
    """
    n = grid.n
    workers = settings.workers if workers is None else workers
    column = [np.array(f0, dtype=float)]
    for j in range(n):
        y = grid.y_at(j)
        column.append(step_y(column[-1], (grid.x0, y), grid.y_at(j + 1) - y, coeffs))

    def run_row(j: int) -> np.ndarray:
        row = np.empty((n + 1, 4, 4))
        row[0] = column[j]
        y = grid.y_at(j)
        for i in range(n):
            x = grid.x_at(i)
            row[i + 1] = step_x(row[i], (x, y), grid.x_at(i + 1) - x, coeffs)
        return row

    out = np.empty((n + 1, n + 1, 4, 4))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = pool.map(run_row, range(n + 1))
        for j, row in enumerate(tqdm(rows, total=n + 1, desc="rows", disable=not progress)):
            out[:, j] = row
    return out


# ---------------------------------------------------------------------------
# Constant K
# ---------------------------------------------------------------------------


def _k1_norms(p: dict) -> Tuple[float, float, float, float]:
    a1, b1, c1, a2, b2, c2 = p["f"]
    dx = dict(zip(COEFF_NAMES, p["dx"]))
    dy = dict(zip(COEFF_NAMES, p["dy"]))
    dxx = dict(zip(COEFF_NAMES, p["dxx"]))
    dyy = dict(zip(COEFF_NAMES, p["dyy"]))

    A = c1 * (dy["a2"] - a1 * c2)
    B = c2 * (dx["a1"] - a2 * c1)
    C = c1 * (dy["b2"] - b1 * c2)
    D = c2 * (dx["b1"] - b2 * c1)
    E = dxx["c2"] + dyy["c1"] + c1 * (a2 * a2 + b2 * b2) + c2 * (a1 * a1 + b1 * b1)
    return (
        0.5 * math.sqrt(A * A + B * B),
        0.5 * math.sqrt(C * C + D * D),
        0.5 * math.sqrt(A * A + C * C + E * E),
        0.5 * math.sqrt(B * B + D * D + E * E),
    )


def _k2_value(p: dict) -> float:
    f = ConnCoeffs(**dict(zip(COEFF_NAMES, p["f"])))
    fx = ConnCoeffs(**dict(zip(COEFF_NAMES, p["dx"])))
    fy = ConnCoeffs(**dict(zip(COEFF_NAMES, p["dy"])))
    return max(
        float(np.linalg.norm(omega1_matrix(f))),
        float(np.linalg.norm(omega2_matrix(f))),
        0.5 * float(np.linalg.norm(omega1_matrix(fx))),
        0.5 * float(np.linalg.norm(omega2_matrix(fy))),
    )


def estimate_K(
    grid: GridSpec,
    samples: int,
    coeffs: CoefficientField = conn_coeffs,
    fd_step: Optional[float] = None,
) -> ConvergenceK:
    """K = max(K1, K2) + 1 sampled on a samples x samples grid over E."""
    if samples < 2:
        raise ValueError("estimate_K needs at least 2 samples per side")
    xs = np.linspace(grid.x0, grid.x0 + grid.a, samples)
    ys = np.linspace(grid.y0, grid.y0 + grid.a, samples)
    k1 = 0.0
    k2 = 0.0
    for x in xs:
        for y in ys:
            p = coeff_partials(float(x), float(y), fd_step, coeffs, second=True)
            k1 = max(k1, *_k1_norms(p))
            k2 = max(k2, _k2_value(p))
    return ConvergenceK(K1=k1, K2=k2, K=max(k1, k2) + 1.0)


def global_bound(delta: float, K: float, a: float) -> float:
    return delta * (math.exp(2.0 * K * a) - 1.0)


# ---------------------------------------------------------------------------
# Reference oracle
# ---------------------------------------------------------------------------


def reference_frame(
    segment: Tuple[str, float, float, float],
    f0: Frame,
    tol: float = 1e-12,
    coeffs: CoefficientField = conn_coeffs,
    chunk: float = 0.05,
) -> Frame:
    """
    High-order solution of dF = F Omega_i along an axis-parallel segment.

    segment = ("x", y, x_start, x_end) or ("y", x, y_start, y_end). The segment
    is split into chunks; each chunk is integrated by DOP853 and projected back
    onto the orthogonal group.
    """
    axis, fixed, start, end = segment
    if axis not in ("x", "y"):
        raise ValueError(f"segment axis must be 'x' or 'y', got {axis!r}")
    frame = np.array(f0, dtype=float)
    if start == end:
        return frame

    def rhs(s: float, state: np.ndarray) -> np.ndarray:
        if axis == "x":
            om = omega1_matrix(coeffs(s, fixed))
        else:
            om = omega2_matrix(coeffs(fixed, s))
        return (state.reshape(4, 4) @ om).ravel()

    pieces = max(1, math.ceil(abs(end - start) / chunk))
    knots = np.linspace(start, end, pieces + 1)
    for s0, s1 in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(
            rhs,
            (float(s0), float(s1)),
            frame.ravel(),
            method="DOP853",
            rtol=tol,
            atol=tol * 1e-2,
        )
        if not sol.success:
            raise ToleranceNotMetError(f"reference integration failed on [{s0}, {s1}]: {sol.message}")
        raw = sol.y[:, -1].reshape(4, 4)
        defect = orthogonality_defect(raw)
        if defect > max(1e3 * tol, 1e-9):
            raise ToleranceNotMetError(
                f"reference frame lost orthogonality ({defect:.2e}) on [{s0}, {s1}]"
            )
        frame, _ = polar(raw)
    return frame


def reference_at(
    start: Point,
    target: Point,
    f0: Frame,
    tol: float = 1e-12,
    coeffs: CoefficientField = conn_coeffs,
) -> Frame:
    """Reference frame at target, reached along x first and then y."""
    (x0, y0), (xp, yp) = start, target
    frame = reference_frame(("x", y0, x0, xp), f0, tol, coeffs)
    return reference_frame(("y", xp, y0, yp), frame, tol, coeffs)


# ---------------------------------------------------------------------------
# Orders and studies
# ---------------------------------------------------------------------------


def fit_order(hs: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(hs, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > 0
    if keep.sum() < 2:
        raise InsufficientResolutionError("need at least two positive errors to fit an order")
    slope, _ = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)
    return float(slope)


def convergence_study(
    grid: GridSpec,
    ns: Iterable[int],
    target: Optional[Point] = None,
    f0: Optional[Frame] = None,
    K: Optional[ConvergenceK] = None,
    coeffs: CoefficientField = conn_coeffs,
    ref_tol: float = 1e-12,
    progress: bool = False,
) -> ConvergenceStudy:
    """Global error and canonical-path gap at `target` for each n in ns."""
    target = (grid.x0 + grid.a, grid.y0 + grid.a) if target is None else target
    f0 = _I4 if f0 is None else np.asarray(f0, dtype=float)
    K = estimate_K(grid, 20, coeffs) if K is None else K
    ref = reference_at((grid.x0, grid.y0), target, f0, ref_tol, coeffs)

    rows: List[ConvergenceRow] = []
    for n in tqdm(list(ns), desc="convergence", disable=not progress):
        g = GridSpec(x0=grid.x0, y0=grid.y0, a=grid.a, n=n)
        lower, upper = canonical_frames(g, target, f0, coeffs)
        rows.append(
            ConvergenceRow(
                n=n,
                delta=g.delta,
                global_error=float(np.linalg.norm(lower - ref)),
                path_gap=float(np.linalg.norm(lower - upper)),
                bound=global_bound(g.delta, K.K, grid.a),
            )
        )
        logger.debug("n=%d error=%.3e gap=%.3e", n, rows[-1].global_error, rows[-1].path_gap)

    deltas = [r.delta for r in rows]
    return ConvergenceStudy(
        rows=rows,
        K=K,
        global_order=fit_order(deltas, [r.global_error for r in rows]),
        path_order=fit_order(deltas, [r.path_gap for r in rows]),
    )


def orthogonality_stress(
    steps: int = 1_000_000,
    pool: int = 64,
    seed: int = 0,
    coeffs: CoefficientField = conn_coeffs,
    region: Tuple[float, float, float, float] = (0.2, 5.0, -3.0, 3.0),
) -> float:
    """
    Apply `steps` random x/y step matrices, drawn from a pool built at random
    points of `region`, and return max |F^T F - I|.
    """
    rng = np.random.default_rng(seed)
    x_lo, x_hi, y_lo, y_hi = region
    mats = []
    for k in range(pool):
        x = float(rng.uniform(x_lo, x_hi))
        y = float(rng.uniform(y_lo, y_hi))
        h = float(rng.uniform(-0.5, 0.5))
        c = coeffs(x, y)
        if k % 2 == 0:
            mats.append(step_matrix(omega1_matrix(c), h, c.nu1_sq))
        else:
            mats.append(step_matrix(omega2_matrix(c), h, c.nu2_sq))
    picks = rng.integers(0, pool, size=steps)
    frame = _I4.copy()
    for k in picks:
        frame = frame @ mats[k]
    return orthogonality_defect(frame)
