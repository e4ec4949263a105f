# app/curves.py
"""
Coordinate curves of the curvature surface and the geometry they carry.

Surface points are never integrated on their own. Along an x-curve the point
is F(x, y0) w_x(y0) + A(y0) and along a y-curve F(x0, y) w_y(x0) + A~(x0),
with w_x, w_y constant coefficient vectors in the frame basis
[phi, X_alpha, X_beta, xi]. A discrete curve is therefore the frame sequence
applied to one vector, i.e. the telescoping sum of its edge increments.

Frames are stepped toward the parameter where the curve's step density
vanishes (x = |y0| on x-curves, y = 0 on y-curves). A curve that contains
that point is built in two halves, each from its own end, and the halves are
glued by the orthogonal C with C F_right = F_left there.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .connection import CoefficientField, conn_coeffs, omega1_matrix, omega2_matrix, step_weights
from .errors import DegenerateStepError, DomainError, InsufficientResolutionError
from .integrator import Frame, fit_order, step_x, step_y
from .models import CurveKind, CurveSample, CuspReport, DiagonalBuild, GridSpec, SphereFit
from .specfun import SQRT5, eval_x0

logger = logging.getLogger(__name__)

_I4 = np.eye(4)
E_PHI, E_ALPHA, E_BETA, E_XI = _I4

# reflection (x, y) -> (x, -y) acts on the normalized y-curve by this matrix
REFLECTION_B = np.diag([-1.0, 1.0, 1.0, 1.0])

StepFn = Callable[[Frame, float, float], Frame]


# ---------------------------------------------------------------------------
# Constant vectors, as coefficients in the frame basis
# ---------------------------------------------------------------------------


def u_coeffs(y: float) -> np.ndarray:
    """u(y) = (y X_beta - phi) / sqrt(1 + y^2); constant along x-curves."""
    return np.array([-1.0, 0.0, y, 0.0]) / math.sqrt(1.0 + y * y)


def n_coeffs(y: float) -> np.ndarray:
    return np.array([y, 0.0, 1.0, 0.0]) / math.sqrt(1.0 + y * y)


def fvec_coeffs(y: float) -> np.ndarray:
    """Unit vector from the x-curve sphere center to the surface point."""
    s2 = 1.0 + y * y
    return np.array([y, 0.0, 1.0, -2.0 * s2]) / math.sqrt(s2 * (5.0 + 4.0 * y * y))


def u2_coeffs(y: float) -> np.ndarray:
    return np.array([2.0 * y, 0.0, 2.0, 1.0]) / math.sqrt(5.0 + 4.0 * y * y)


def x_sphere_radius(y: float) -> float:
    return math.sqrt((5.0 + 4.0 * y * y) / (1.0 + y * y)) / (2.0 * SQRT5)


def x_point_coeffs(y: float) -> np.ndarray:
    """x_sphere_radius(y) * fvec_coeffs(y)."""
    s2 = 1.0 + y * y
    return np.array([y, 0.0, 1.0, -2.0 * s2]) / (2.0 * SQRT5 * s2)


def _b2c2(x: float) -> Tuple[float, float]:
    e = eval_x0(x)
    return -0.5 * e.d1_over_x - SQRT5, e.d2_minus_d1_over_x


def utilde_coeffs(x: float) -> np.ndarray:
    """u~(x) = (-B2 X_alpha + C2 xi) / N; constant along y-curves."""
    b2, c2 = _b2c2(x)
    return np.array([0.0, -b2, 0.0, c2]) / math.hypot(b2, c2)


def ftilde_coeffs(x: float) -> np.ndarray:
    b2, c2 = _b2c2(x)
    return np.array([0.0, c2, 0.0, b2]) / math.hypot(b2, c2)


def y_sphere_radius(x: float) -> float:
    """(B2^2 + C2^2)^(-1/2)."""
    b2, c2 = _b2c2(x)
    return 1.0 / math.hypot(b2, c2)


def y_point_coeffs(x: float) -> np.ndarray:
    b2, c2 = _b2c2(x)
    return np.array([0.0, c2, 0.0, b2]) / (b2 * b2 + c2 * c2)


def v1_coeffs(x: float, y: float) -> np.ndarray:
    """v1(y) expressed in the frame at (x, y); a unit vector independent of x."""
    e = eval_x0(x)
    g = e.d1_over_x
    c2 = e.d2_minus_d1_over_x
    s2 = 1.0 + y * y
    s = math.sqrt(s2)
    h = 2.0 * e.value - x * x * g + y * y * g + SQRT5
    k = 2.0 * g * s2 - h
    return np.array([y * k / (h * s), -2.0 * c2 * s / h, k / (h * s), (g + 2.0 * SQRT5) * s / h])


def u_derivative_coeffs(x: float, y: float, coeffs: CoefficientField = conn_coeffs) -> np.ndarray:
    """du/dy in the frame basis; its norm is y^2 / (1 + y^2) for every x."""
    s3 = (1.0 + y * y) ** 1.5
    return omega2_matrix(coeffs(x, y)) @ u_coeffs(y) + np.array([y, 0.0, 1.0, 0.0]) / s3


def utilde_derivative_coeffs(x: float, y: float, coeffs: CoefficientField = conn_coeffs) -> np.ndarray:
    """du~/dx in the frame basis; its norm is T(x)."""
    if not x > 0:
        raise DomainError(f"du~/dx needs x > 0, got {x!r}")
    e = eval_x0(x)
    b2 = -0.5 * e.d1_over_x - SQRT5
    c2 = e.d2_minus_d1_over_x
    db2 = -c2 / (2.0 * x)
    dc2 = e.d3 - c2 / x
    nn = math.hypot(b2, c2)
    dnn = (b2 * db2 + c2 * dc2) / nn
    v = np.array([0.0, -b2, 0.0, c2])
    dv = np.array([0.0, -db2, 0.0, dc2])
    return omega1_matrix(coeffs(x, y)) @ (v / nn) + dv / nn - v * dnn / (nn * nn)


# ---------------------------------------------------------------------------
# Frame sequences
# ---------------------------------------------------------------------------


def _node_grid(lo: float, hi: float, n: int, split: float) -> Tuple[np.ndarray, int]:
    """n + 1 nodes on [lo, hi] with `split` inserted as a node when interior."""
    if not hi > lo:
        raise DomainError(f"empty parameter range [{lo}, {hi}]")
    if n < 1:
        raise DomainError("a curve needs at least one step")
    if lo < split < hi:
        if n < 2:
            raise DomainError("a curve through its stationary point needs n >= 2")
        n_left = min(n - 1, max(1, round(n * (split - lo) / (hi - lo))))
        left = np.linspace(lo, split, n_left + 1)
        right = np.linspace(split, hi, n - n_left + 1)
        return np.concatenate([left, right[1:]]), n_left
    if split <= lo:
        return np.linspace(lo, hi, n + 1), 0
    return np.linspace(lo, hi, n + 1), n


def _frames_toward(params: np.ndarray, split_idx: int, init: Frame, step: StepFn) -> np.ndarray:
    m = len(params)
    frames = np.empty((m, 4, 4))
    frames[0] = init
    for i in range(split_idx):
        frames[i + 1] = step(frames[i], float(params[i]), float(params[i + 1] - params[i]))
    if split_idx < m - 1:
        tail = np.empty((m - split_idx, 4, 4))
        tail[-1] = _I4
        for k in range(m - 1, split_idx, -1):
            j = k - split_idx
            tail[j - 1] = step(tail[j], float(params[k]), float(params[k - 1] - params[k]))
        glue = frames[split_idx] @ tail[0].T
        frames[split_idx:] = glue @ tail
    return frames


def _points(frames: np.ndarray, w: np.ndarray) -> np.ndarray:
    pts = frames @ w
    return pts - pts[0]


def _trapezoid_points(frames: np.ndarray, params: np.ndarray, density: np.ndarray, axis: int) -> np.ndarray:
    vel = frames[:, :, axis] * density[:, None]
    inc = 0.5 * (vel[1:] + vel[:-1]) * np.diff(params)[:, None]
    return np.vstack([np.zeros(4), np.cumsum(inc, axis=0)])


def _initial(init: Optional[Frame]) -> Frame:
    return _I4.copy() if init is None else np.array(init, dtype=float)


def build_x_curve(
    y0: float,
    x_range: Tuple[float, float],
    n: int,
    init: Optional[Frame] = None,
    coeffs: CoefficientField = conn_coeffs,
    direction: str = "toward",
    method: str = "telescoping",
) -> CurveSample:
    """
    The x-curve f(x, y0) on [x_lo, x_hi], x_lo > 0, with F(x_lo) = init.

    direction="toward" builds x < |y0| forward and x > |y0| backward from
    the far end; "forward" steps in increasing x throughout and refuses a
    step based on the diagonal. method="trapezoid" integrates
    f_x = theta_1 X_alpha instead of using the telescoping sum.
    """
    x_lo, x_hi = float(x_range[0]), float(x_range[1])
    if not x_lo > 0:
        raise DomainError(f"x-curves live in x > 0, got x_lo={x_lo!r}")
    ay = abs(y0)

    if direction == "toward":
        params, split_idx = _node_grid(x_lo, x_hi, n, ay)
    elif direction == "forward":
        params = np.linspace(x_lo, x_hi, n + 1)
        if ay > 0 and np.any(np.abs(params[:-1] - ay) <= 1e-14 * max(1.0, ay)):
            raise DegenerateStepError(f"forward x-step based on the diagonal x = |y0| = {ay}")
        split_idx = n
    else:
        raise ValueError(f"unknown direction {direction!r}")

    def step(frame: Frame, x: float, dx: float) -> Frame:
        return step_x(frame, (x, y0), dx, coeffs)

    frames = _frames_toward(params, split_idx, _initial(init), step)
    if method == "telescoping":
        points = _points(frames, x_point_coeffs(y0))
    elif method == "trapezoid":
        dens = np.array([step_weights(float(x), y0).theta1_density for x in params])
        points = _trapezoid_points(frames, params, dens, 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    logger.debug("x-curve y0=%g on [%g, %g], %d nodes", y0, x_lo, x_hi, len(params))
    return CurveSample(kind=CurveKind.X_CURVE, fixed=y0, params=params, points=points, frames=frames)


def build_y_curve(
    x0: float,
    y_range: Tuple[float, float],
    n: int,
    init: Optional[Frame] = None,
    coeffs: CoefficientField = conn_coeffs,
    method: str = "telescoping",
) -> CurveSample:
    """The y-curve f(x0, y) on [y_lo, y_hi] with F(y_lo) = init."""
    if not x0 > 0:
        raise DomainError(f"y-curves live in x > 0, got x0={x0!r}")
    y_lo, y_hi = float(y_range[0]), float(y_range[1])
    params, split_idx = _node_grid(y_lo, y_hi, n, 0.0)

    def step(frame: Frame, y: float, dy: float) -> Frame:
        return step_y(frame, (x0, y), dy, coeffs)

    frames = _frames_toward(params, split_idx, _initial(init), step)
    if method == "telescoping":
        points = _points(frames, y_point_coeffs(x0))
    elif method == "trapezoid":
        dens = np.array([step_weights(x0, float(y)).theta2_density for y in params])
        points = _trapezoid_points(frames, params, dens, 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    logger.debug("y-curve x0=%g on [%g, %g], %d nodes", x0, y_lo, y_hi, len(params))
    return CurveSample(kind=CurveKind.Y_CURVE, fixed=x0, params=params, points=points, frames=frames)


def build_diagonal(
    y_range: Tuple[float, float],
    n: int,
    init: Optional[Frame] = None,
    coeffs: CoefficientField = conn_coeffs,
    sub: int = 8,
) -> DiagonalBuild:
    """
    The cuspidal edge f(y, y) along the staircase
    (y0,y0) -> (y0,y1) -> (y1,y1) -> ..., plus for each i the substitute
    x-curve on [y_i, y_i+1] x {y_i} built backward from (y_i+1, y_i) and
    attached at the corner. `forward_stall` is the largest move of the
    surface point under a forward x-step from a corner.
    """
    a, b = float(y_range[0]), float(y_range[1])
    if not 0 < a < b:
        raise DomainError(f"diagonal needs 0 < a < b, got [{a}, {b}]")
    if n < 1:
        raise DomainError("diagonal needs at least one step")
    ys = np.linspace(a, b, n + 1)
    frames = np.empty((n + 1, 4, 4))
    points = np.zeros((n + 1, 4))
    frames[0] = _initial(init)
    stall = 0.0
    substitutes: List[CurveSample] = []

    for i in range(n):
        yi, yn = float(ys[i]), float(ys[i + 1])
        d = yn - yi
        F = frames[i]

        forward = step_x(F, (yi, yi), d, coeffs)
        stall = max(stall, float(np.linalg.norm((forward - F) @ x_point_coeffs(yi))))

        k = build_x_curve(yi, (yi, yn), sub, init=F, coeffs=coeffs)
        substitutes.append(k.model_copy(update={"points": k.points + points[i]}))

        up = step_y(F, (yi, yi), d, coeffs)
        corner = points[i] + (up - F) @ y_point_coeffs(yi)
        frames[i + 1] = step_x(up, (yi, yn), d, coeffs)
        points[i + 1] = corner + (frames[i + 1] - up) @ x_point_coeffs(yn)

    diagonal = CurveSample(kind=CurveKind.DIAGONAL, fixed=0.0, params=ys, points=points, frames=frames)
    return DiagonalBuild(diagonal=diagonal, substitutes=substitutes, forward_stall=stall)


def surface_points(grid: GridSpec, frames: np.ndarray) -> np.ndarray:
    """
    Surface points for frames from sweep_grid, shape (n+1, n+1, 4): up the
    column x = x0 with w_y(x0), then along each row with w_x(y_j).
    """
    n = grid.n
    if frames.shape != (n + 1, n + 1, 4, 4):
        raise ValueError(f"frames shape {frames.shape} does not match an n={n} grid")
    wy = y_point_coeffs(grid.x0)
    column = frames[0] @ wy
    column = column - column[0]
    out = np.empty((n + 1, n + 1, 4))
    for j in range(n + 1):
        row = frames[:, j] @ x_point_coeffs(grid.y_at(j))
        out[:, j] = column[j] + row - row[0]
    return out


# ---------------------------------------------------------------------------
# Spheres
# ---------------------------------------------------------------------------


def _point_coeffs(curve: CurveSample) -> np.ndarray:
    if curve.kind == CurveKind.X_CURVE:
        return x_point_coeffs(curve.fixed)
    if curve.kind == CurveKind.Y_CURVE:
        return y_point_coeffs(abs(curve.fixed))
    raise DomainError(f"{curve.kind.value} samples carry no sphere")


def sphere_centers(curve: CurveSample) -> np.ndarray:
    """A_i = point_i - r fvec_i (x-curves) or the y-curve analogue."""
    return curve.points - curve.frames @ _point_coeffs(curve)


def curve_normal(curve: CurveSample) -> np.ndarray:
    """The constant hyperplane normal u(y0) or u~(x0), taken at the first sample."""
    if curve.kind == CurveKind.X_CURVE:
        return curve.frames[0] @ u_coeffs(curve.fixed)
    if curve.kind == CurveKind.Y_CURVE:
        return curve.frames[0] @ utilde_coeffs(abs(curve.fixed))
    raise DomainError(f"{curve.kind.value} samples carry no sphere")


def fit_sphere(
    points: np.ndarray,
    normal: np.ndarray,
    center: Optional[np.ndarray] = None,
) -> SphereFit:
    """
    Sphere through `points` inside the hyperplane orthogonal to `normal`.
    Without `center` the center and radius come from an algebraic least
    squares fit; with it only the radius is fitted.
    """
    P = np.asarray(points, dtype=float)
    nrm = np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    base = P.mean(axis=0)
    _, _, vt = np.linalg.svd(nrm[None, :])
    basis = vt[1:].T  # (4, 3), orthogonal to nrm
    Q = (P - base) @ basis

    if center is None:
        if len(P) < 4:
            raise InsufficientResolutionError("a sphere fit needs at least 4 points")
        A = np.column_stack([2.0 * Q, np.ones(len(Q))])
        sol, *_ = np.linalg.lstsq(A, np.sum(Q * Q, axis=1), rcond=None)
        c = sol[:3]
        radius = math.sqrt(max(sol[3] + float(c @ c), 0.0))
    else:
        c = (np.asarray(center, dtype=float) - base) @ basis
        radius = float(np.mean(np.linalg.norm(Q - c, axis=1)))

    radial = np.linalg.norm(Q - c, axis=1)
    return SphereFit(
        center=base + basis @ c,
        radius=radius,
        normal=nrm,
        max_radial_dev=float(np.max(np.abs(radial - radius))),
        max_planar_dev=float(np.max(np.abs((P - base) @ nrm))),
    )


def curve_sphere(curve: CurveSample) -> SphereFit:
    """Sphere of an x- or y-curve, centered at the mean of its A_i."""
    return fit_sphere(curve.points, curve_normal(curve), sphere_centers(curve).mean(axis=0))


def center_drift(curve: CurveSample) -> float:
    A = sphere_centers(curve)
    return float(np.max(np.linalg.norm(A - A[0], axis=1)))


# ---------------------------------------------------------------------------
# Cusps
# ---------------------------------------------------------------------------


def _cusp_directions(curve: CurveSample, frame: Frame) -> Sequence[np.ndarray]:
    if curve.kind == CurveKind.X_CURVE:
        y = curve.fixed
        return frame[:, 1], frame @ u2_coeffs(y), frame @ fvec_coeffs(y)
    x = abs(curve.fixed)
    return frame[:, 2], frame[:, 0], frame @ ftilde_coeffs(x)


def detect_cusp(
    curve: CurveSample,
    at_param: float,
    window: Tuple[float, float] = (4.0, 64.0),
    min_points: int = 8,
) -> Optional[CuspReport]:
    """
    Leading exponents of the curve at `at_param` along the three adapted
    directions, fitted log-log on |t| in [window[0] delta, window[1] delta]
    on each side and averaged. Returns None when the speed does not drop
    toward `at_param`.
    """
    if curve.kind not in (CurveKind.X_CURVE, CurveKind.Y_CURVE):
        raise DomainError("cusps are detected on x- and y-curves only")
    params = np.asarray(curve.params, dtype=float)
    k = int(np.argmin(np.abs(params - at_param)))
    if abs(params[k] - at_param) > 1e-9 * max(1.0, abs(at_param)):
        raise InsufficientResolutionError(f"{at_param} is not a node of the curve")
    delta = float(np.median(np.abs(np.diff(params))))
    t = params - params[k]
    lo, hi = window[0] * delta, window[1] * delta
    slack = 1e-9 * hi
    right = (t >= lo - slack) & (t <= hi + slack)
    left = (-t >= lo - slack) & (-t <= hi + slack)
    if right.sum() < min_points or left.sum() < min_points:
        raise InsufficientResolutionError(
            f"need {min_points} samples on each side within {window} steps of {at_param}"
        )

    speed = np.linalg.norm(np.diff(curve.points, axis=0), axis=1) / np.abs(np.diff(params))
    near = max(speed[k - 1], speed[k])
    far_idx = [int(np.argmin(np.abs(t - hi))), int(np.argmin(np.abs(t + hi)))]
    far = min(speed[min(i, len(speed) - 1)] for i in far_idx)
    if near > 0.1 * far:
        logger.debug("no cusp at %g: speed %.3g near vs %.3g away", at_param, near, far)
        return None

    frame = curve.frames[k]
    d = curve.points - curve.points[k]
    exps = []
    for v in _cusp_directions(curve, frame):
        proj = np.abs(d @ v)
        sides = []
        for sel in (left, right):
            tt, pp = np.abs(t[sel]), proj[sel]
            keep = pp > 0
            sides.append(fit_order(tt[keep], pp[keep]))
        exps.append(0.5 * (sides[0] + sides[1]))
    return CuspReport(at_param=float(params[k]), exponents=tuple(exps), frame_at_cusp=frame.copy())


# ---------------------------------------------------------------------------
# Normalization and reflection
# ---------------------------------------------------------------------------


def _node_index(params: np.ndarray, value: float) -> int:
    k = int(np.argmin(np.abs(params - value)))
    if abs(params[k] - value) > 1e-12 * max(1.0, float(np.max(np.abs(params)))):
        raise DomainError(f"{value} is not a node of the curve")
    return k


def anchor_curve(
    curve: CurveSample,
    at_param: float,
    frame: Optional[Frame] = None,
    point: Optional[np.ndarray] = None,
) -> CurveSample:
    """Rigid motion of the curve putting `frame` and `point` (default Id and 0) at `at_param`."""
    k = _node_index(curve.params, at_param)
    target = _initial(frame)
    origin = np.zeros(4) if point is None else np.asarray(point, dtype=float)
    glue = target @ curve.frames[k].T
    return curve.model_copy(
        update={
            "points": (curve.points - curve.points[k]) @ glue.T + origin,
            "frames": glue @ curve.frames,
        }
    )


def normalize_y_curve(curve: CurveSample) -> CurveSample:
    """f^ = F(x0, 0)^T (f - f(x0, 0)); afterwards F^(x0, 0) = Id."""
    if curve.kind != CurveKind.Y_CURVE:
        raise DomainError("only y-curves are normalized at y = 0")
    return anchor_curve(curve, 0.0)


def reflection_residual(curve: CurveSample) -> float:
    """max ||B f^(x0, -y) - f^(x0, y)|| over mirrored node pairs."""
    norm = normalize_y_curve(curve)
    params = norm.params
    worst = 0.0
    pairs = 0
    scale = max(1.0, float(np.max(np.abs(params))))
    for i, p in enumerate(params):
        if p <= 0:
            continue
        j = int(np.argmin(np.abs(params + p)))
        if abs(params[j] + p) > 1e-12 * scale:
            continue
        pairs += 1
        worst = max(worst, float(np.linalg.norm(REFLECTION_B @ norm.points[j] - norm.points[i])))
    if pairs == 0:
        raise InsufficientResolutionError("the curve has no mirrored node pairs")
    return worst


def reflect_to_Dminus(curve: CurveSample) -> CurveSample:
    """Re-index a sample from (x, y) to (-x, y); applying it twice is the identity."""
    update = {"side": -curve.side}
    if curve.kind == CurveKind.X_CURVE:
        update["params"] = -np.asarray(curve.params)
    elif curve.kind == CurveKind.Y_CURVE:
        update["fixed"] = -curve.fixed
    return curve.model_copy(update=update)
