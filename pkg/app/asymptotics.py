# app/asymptotics.py
"""
Limits of the surface: x -> 0 (through u = -log x), x -> inf and y -> +-inf.

Every analysis starts from one anchor, the frame `init` at (x_ref, 0), so the
constant vectors they extract belong to the same surface and can be compared.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm, polar

from .config import settings
from .connection import CoefficientField, conn_coeffs, omega1_matrix
from .curves import (
    E_ALPHA,
    _initial,
    anchor_curve,
    build_x_curve,
    build_y_curve,
    fvec_coeffs,
    n_coeffs,
    sphere_centers,
    u2_coeffs,
    u_coeffs,
    u_derivative_coeffs,
    utilde_coeffs,
    utilde_derivative_coeffs,
    v1_coeffs,
    x_point_coeffs,
    y_point_coeffs,
    y_sphere_radius,
)
from .errors import DomainError, NonConvergenceError
from .integrator import Frame, step_u, sweep_grid
from .models import (
    AsymptoticCircles,
    CurveKind,
    CurveSample,
    GaugeShift,
    GridSpec,
    OriginLimit,
    XAsymptotics,
    YAsymptotics,
)
from .specfun import SQRT5, _w_integrand, eval_x0, h_weight, t_function, w_function

logger = logging.getLogger(__name__)

ANGULAR_SPEED = 0.5 * SQRT5


# ---------------------------------------------------------------------------
# v2, v3
# ---------------------------------------------------------------------------


def v_components(x: float, y: float) -> Tuple[float, float]:
    """(v2, v3) with dX_alpha/du = v3 f - v2 u2; defined at x = 0 as well."""
    e = eval_x0(x)
    P = e.value + 0.5 * SQRT5
    s5 = 5.0 + 4.0 * y * y
    h = h_weight(x, y)
    d = x * x - y * y
    v2 = (s5 * P + SQRT5 * d) / (math.sqrt(s5) * h)
    v3 = 2.0 * SQRT5 * d / h * math.sqrt((1.0 + y * y) / s5)
    return v2, v3


def v_components_from_connection(
    x: float, y: float, coeffs: CoefficientField = conn_coeffs
) -> Tuple[float, float]:
    """(x <dX_alpha/dx, u2>, -x <dX_alpha/dx, f>), read off Omega_1."""
    col = omega1_matrix(coeffs(x, y))[:, 1]
    return x * float(col @ u2_coeffs(y)), -x * float(col @ fvec_coeffs(y))


def v_bounds(x: float, y: float) -> Tuple[float, float]:
    """Envelopes for |v2(x,y) - v2(0,y)| and |v3(x,y) - v3(0,y)| at small x."""
    h = h_weight(x, y)
    y2 = y * y
    s5 = 5.0 + 4.0 * y2
    b2 = 1.5 * (5.0 + SQRT5 + 4.0 * y2) / math.sqrt(s5) * x * x / h
    b3 = (2.0 * SQRT5 / 7.0) * math.sqrt((1.0 + y2) / s5) * x * x * (7.0 + y2) / h
    return b2, b3


def v_envelope_margin(xs: Iterable[float], ys: Iterable[float]) -> float:
    """max over samples of |v_i(x,y) - v_i(0,y)| - bound_i; negative when all hold."""
    ys = list(ys)
    worst = -math.inf
    for x in xs:
        for y in ys:
            v2, v3 = v_components(x, y)
            w2, w3 = v_components(0.0, y)
            b2, b3 = v_bounds(x, y)
            worst = max(worst, abs(v2 - w2) - b2, abs(v3 - w3) - b3)
    return worst


# ---------------------------------------------------------------------------
# Walks from the anchor
# ---------------------------------------------------------------------------


def _start_at(
    x_ref: float,
    y: float,
    init: Optional[Frame],
    steps_per_unit: int,
    coeffs: CoefficientField,
) -> Tuple[Frame, np.ndarray]:
    """Frame and surface point at (x_ref, y), reached up the line x = x_ref."""
    if y == 0.0:
        return _initial(init), np.zeros(4)
    lo, hi = (0.0, y) if y > 0 else (y, 0.0)
    n = max(8, math.ceil(steps_per_unit * (hi - lo)))
    c = anchor_curve(build_y_curve(x_ref, (lo, hi), n, coeffs=coeffs), 0.0, init)
    k = -1 if y > 0 else 0
    return c.frames[k], c.points[k]


def _u_walk(
    frame: Frame,
    point: np.ndarray,
    x_start: float,
    y: float,
    u_end: float,
    n: int,
    coeffs: CoefficientField,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u, frames, points) along x = e^-u from x_start down to e^-u_end."""
    u0 = -math.log(x_start)
    if not u_end > u0:
        raise DomainError(f"u-walk needs u_end > {u0}, got {u_end}")
    if math.exp(-u_end) < settings.x_min:
        raise DomainError(f"u_end={u_end} goes below x_min={settings.x_min}")
    us = np.linspace(u0, u_end, n + 1)
    frames = np.empty((n + 1, 4, 4))
    frames[0] = frame
    for k in range(n):
        frames[k + 1] = step_u(frames[k], (math.exp(-us[k]), y), float(us[k + 1] - us[k]), coeffs)
    points = point + (frames - frames[0]) @ x_point_coeffs(y)
    return us, frames, points


def build_u_curve(
    y: float,
    u_range: Tuple[float, float] = (0.0, 10.0),
    n: int = 1000,
    init: Optional[Frame] = None,
    steps_per_unit: int = 100,
    coeffs: CoefficientField = conn_coeffs,
) -> CurveSample:
    """The x-curve at y in the variable u = -log x; `init` is the frame at (e^-u_lo, 0)."""
    u_lo, u_hi = u_range
    x_start = math.exp(-u_lo)
    F0, p0 = _start_at(x_start, y, init, steps_per_unit, coeffs)
    us, frames, points = _u_walk(F0, p0, x_start, y, u_hi, n, coeffs)
    return CurveSample(kind=CurveKind.U_CURVE, fixed=y, params=us, points=points, frames=frames)


def _angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise angle between unit vectors."""
    return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))


def _orthonormal_pair(b: np.ndarray, c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    q, _ = polar(np.column_stack([b, c]))
    return q[:, 0], q[:, 1]


def _circle_fit(t: np.ndarray, vecs: np.ndarray, sign: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """vecs ~ cos t b + sign sin t c by least squares; returns b, c and the max residual."""
    A = np.column_stack([np.cos(t), sign * np.sin(t)])
    coef, *_ = np.linalg.lstsq(A, vecs, rcond=None)
    b, c = _orthonormal_pair(coef[0], coef[1])
    fit = np.outer(np.cos(t), b) + sign * np.outer(np.sin(t), c)
    return b, c, float(np.max(np.linalg.norm(vecs - fit, axis=1)))


def _projector(*vecs: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(np.column_stack(vecs))
    return Q @ Q.T


def _x_steps(length: float, steps_per_unit: int) -> int:
    return max(8, math.ceil(steps_per_unit * length))


# ---------------------------------------------------------------------------
# x -> 0
# ---------------------------------------------------------------------------


def asymptotic_u_analysis(
    y_values: Sequence[float],
    u_max: float = 12.0,
    n: int = 1200,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    steps_per_unit: int = 100,
    coeffs: CoefficientField = conn_coeffs,
) -> AsymptoticCircles:
    """
    Walk each x-curve f(e^-u, y) from x_ref to u_max. M = [X_alpha, f, u2]
    is unwound by the limiting rotation exp(u V0); the result must settle
    at an orthogonal N_inf with an x^2 envelope. X_alpha gives b_inf, c_inf
    and the angular speed; the last full turn of f gives the Gamma radius.
    """
    if u_max < 5.0:
        raise DomainError(f"u_max must be at least 5, got {u_max}")
    if not y_values:
        raise DomainError("asymptotic_u_analysis needs at least one y")
    u0 = -math.log(x_ref)

    speeds: Dict[float, float] = {}
    v0_norms: Dict[float, float] = {}
    gamma: Dict[float, Tuple[float, float]] = {}
    v1_gaps: Dict[float, float] = {}
    pairs: List[Tuple[np.ndarray, np.ndarray]] = []
    tail = 0.0

    for y in y_values:
        y = float(y)
        F0, p0 = _start_at(x_ref, y, init, steps_per_unit, coeffs)
        us, frames, points = _u_walk(F0, p0, x_ref, y, u_max, n, coeffs)
        h = float(us[1] - us[0])

        v2, v3 = v_components(0.0, y)
        nu = math.hypot(v2, v3)
        omega_d = 2.0 * math.atan(0.5 * h * nu) / h  # turn per Cayley step
        K = np.array([[0.0, -v3, v2], [v3, 0.0, 0.0], [-v2, 0.0, 0.0]]) / nu

        M = frames @ np.column_stack([E_ALPHA, fvec_coeffs(y), u2_coeffs(y)])
        Mbar = np.array([M[k] @ expm(-omega_d * us[k] * K) for k in range(len(us))])
        N_inf = Mbar[-1]
        r = np.linalg.norm(Mbar - N_inf, axis=(1, 2))
        early = (us >= u0 + 1.0) & (us <= u0 + 3.0)
        C = 4.0 * float(np.max(r[early] * np.exp(2.0 * us[early]))) if early.any() else float(r[0])
        late = us <= u_max - 1.0
        excess = r[late] - (C * np.exp(-2.0 * us[late]) + 1e-10)
        if np.any(excess > 0):
            bad = float(us[late][int(np.argmax(excess))])
            raise NonConvergenceError(f"y={y}: unwound frame leaves the x^2 envelope at u={bad:.3f}")
        k_tail = int(np.argmin(np.abs(us - (u_max - 1.0))))
        tail = max(tail, float(r[k_tail]))

        Xa = M[:, :, 0]
        q = us >= u0 + 0.75 * (u_max - u0)
        idx = np.nonzero(q)[0]
        speeds[y] = float(np.mean(_angle(Xa[idx[:-1]], Xa[idx[1:]]))) / h
        b, c, _ = _circle_fit(omega_d * us[q], Xa[q], -1.0)
        pairs.append((b, c))

        v0 = N_inf @ np.array([0.0, v2, v3])
        v0_norms[y] = float(np.linalg.norm(v0))
        v1_now = frames[-1] @ v1_coeffs(math.exp(-us[-1]), y)
        v1_gaps[y] = float(np.linalg.norm(-(2.0 / SQRT5) * v0 - v1_now))

        period = 2.0 * math.pi / omega_d
        win = us >= u_max - period
        center = points[win].mean(axis=0)
        measured = float(np.mean(np.linalg.norm(points[win] - center, axis=1)))
        gamma[y] = (measured, 2.0 * y * y / (SQRT5 * h_weight(0.0, y)))
        logger.debug("u-analysis y=%g: speed %.6f, Gamma radius %.3e", y, speeds[y], measured)

    b_inf, c_inf = pairs[0]
    spread = max(
        float(np.linalg.norm(b - b_inf) + np.linalg.norm(c - c_inf)) for b, c in pairs
    )
    return AsymptoticCircles(
        b_inf=b_inf,
        c_inf=c_inf,
        fitted_angular_speed=float(np.mean(list(speeds.values()))),
        speeds=speeds,
        v0_norms=v0_norms,
        gamma_radii=gamma,
        v1_gaps=v1_gaps,
        b_inf_spread=spread,
        tail_residual=tail,
    )


# ---------------------------------------------------------------------------
# y -> +-inf
# ---------------------------------------------------------------------------


def _anchored_y_curve(
    x: float, half: float, init: Optional[Frame], steps_per_unit: int, coeffs: CoefficientField
):
    n = 2 * math.ceil(steps_per_unit * half)
    return anchor_curve(build_y_curve(x, (-half, half), n, coeffs=coeffs), 0.0, init)


def _window_mean(params: np.ndarray, points: np.ndarray, center: float, half: float) -> np.ndarray:
    sel = np.abs(params - center) <= half
    return points[sel].mean(axis=0)


def _uutilde_lattice(grid: GridSpec, init: Optional[Frame], every: int, coeffs: CoefficientField) -> float:
    """max |<u(y_j), u~(x_i)>| with u(y_j) from column x0 and u~(x_i) from (x_i, y_j)."""
    frames = sweep_grid(grid, _initial(init), coeffs=coeffs)
    worst = 0.0
    for i in range(0, grid.n + 1, every):
        x = grid.x_at(i)
        ut = utilde_coeffs(x)
        for j in range(0, grid.n + 1, every):
            y = grid.y_at(j)
            u = frames[0, j] @ u_coeffs(y)
            worst = max(worst, abs(float(u @ (frames[i, j] @ ut))))
    return worst


def asymptotic_y_analysis(
    x_values: Sequence[float],
    y_max: float = 50.0,
    steps_per_unit: int = 100,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    lattice: Optional[GridSpec] = None,
    lattice_every: int = 10,
    coeffs: CoefficientField = conn_coeffs,
) -> YAsymptotics:
    """
    Fits u(y) = -sin(y - arctan y) b~ + cos(y - arctan y) c~ along the y-curve
    at x_ref, checks du/dy and <u, u~> = 0, and compares f(x, +-Y) averaged
    over one turn (|y - Y| <= pi) for each x.
    """
    if y_max < 20.0:
        raise DomainError(f"y_max must be at least 20, got {y_max}")
    half = y_max + math.pi

    ref = _anchored_y_curve(x_ref, half, init, steps_per_unit, coeffs)
    ys = ref.params
    theta = ys - np.arctan(ys)
    us_vec = np.array([F @ u_coeffs(float(y)) for F, y in zip(ref.frames, ys)])
    # u = cos(theta + pi/2) b~ + sin(theta + pi/2) c~
    bt, ct, u_res = _circle_fit(theta + 0.5 * math.pi, us_vec, 1.0)
    v1_vec = np.array([F @ v1_coeffs(x_ref, float(y)) for F, y in zip(ref.frames, ys)])
    v1_fit = -np.outer(np.cos(theta), bt) - np.outer(np.sin(theta), ct)
    v1_res = float(np.max(np.linalg.norm(v1_vec - v1_fit, axis=1)))

    dy = float(np.median(np.diff(ys)))
    fd = (us_vec[2:] - us_vec[:-2]) / (ys[2:] - ys[:-2])[:, None]
    exact = np.array([F @ u_derivative_coeffs(x_ref, float(y), coeffs) for F, y in zip(ref.frames[1:-1], ys[1:-1])])
    du_fd = float(np.max(np.linalg.norm(fd - exact, axis=1)))

    sample_ys = np.linspace(-5.0, 5.0, 21)
    du_err = 0.0
    for x in list(x_values) + [x_ref]:
        for y in sample_ys:
            norm = float(np.linalg.norm(u_derivative_coeffs(float(x), float(y), coeffs)))
            du_err = max(du_err, abs(norm - y * y / (1.0 + y * y)))

    grid = lattice or GridSpec(x0=0.5, y0=-2.25, a=4.5, n=90)
    uut = _uutilde_lattice(grid, init, lattice_every, coeffs)

    gaps: Dict[float, float] = {}
    gaps_half: Dict[float, float] = {}
    limit_gaps: Dict[float, float] = {}
    for x in x_values:
        x = float(x)
        c = ref if x == x_ref else _anchored_y_curve(x, half, init, steps_per_unit, coeffs)
        p = c.params
        for Y, out in ((y_max, gaps), (0.5 * y_max, gaps_half)):
            plus = _window_mean(p, c.points, Y, math.pi)
            minus = _window_mean(p, c.points, -Y, math.pi)
            out[x] = float(np.linalg.norm(plus - minus))
        k = int(np.argmin(np.abs(p - y_max)))
        F = c.frames[k]
        v1t = F @ utilde_derivative_coeffs(x, float(p[k]), coeffs) / t_function(x)
        At = c.points[k] - F @ y_point_coeffs(x)
        limit = y_sphere_radius(x) * v1t + At
        limit_gaps[x] = float(np.linalg.norm(_window_mean(p, c.points, y_max, math.pi) - limit))
        logger.debug("y-analysis x=%g: gap %.3e (Y/2: %.3e)", x, gaps[x], gaps_half[x])

    logger.debug("y-analysis: step %.3g, u fit %.3e, v1 fit %.3e", dy, u_res, v1_res)
    return YAsymptotics(
        b_tilde_inf=bt,
        c_tilde_inf=ct,
        u_fit_residual=u_res,
        v1_fit_residual=v1_res,
        u_utilde_max=uut,
        du_dy_max_err=du_err,
        du_dy_fd_err=du_fd,
        endpoint_gaps=gaps,
        endpoint_gaps_half=gaps_half,
        endpoint_limit_gaps=limit_gaps,
    )


# ---------------------------------------------------------------------------
# x -> inf
# ---------------------------------------------------------------------------


def _w_increments(xs: np.ndarray) -> np.ndarray:
    """w at each of the increasing nodes xs, accumulated piecewise."""
    out = np.empty(len(xs))
    out[0] = w_function(float(xs[0]))
    for k in range(1, len(xs)):
        piece, _ = quad(_w_integrand, float(xs[k - 1]), float(xs[k]))
        out[k] = out[k - 1] + SQRT5 * piece
    return out


def _perp(d: np.ndarray, axis: np.ndarray) -> float:
    return float(np.linalg.norm(d - (d @ axis) * axis))


def asymptotic_x_analysis(
    y0: float,
    x_max: float = 100.0,
    steps_per_unit: int = 100,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    n_window: Tuple[float, float] = (10.0, 100.0),
    phase_window: Tuple[float, float] = (20.0, 100.0),
    u_max: float = 12.0,
    sample_every: int = 10,
    coeffs: CoefficientField = conn_coeffs,
) -> XAsymptotics:
    """
    Along the x-curve at y0: x |v1 + n| stays bounded, the phase of xi
    follows w(x), and the centers of the limit circles at x -> 0 and
    x -> inf lie on the line A(y0) + t v1(y0).
    """
    if x_max < 50.0:
        raise DomainError(f"x_max must be at least 50, got {x_max}")
    F0, p0 = _start_at(x_ref, y0, init, steps_per_unit, coeffs)
    curve = build_x_curve(y0, (x_ref, x_max), _x_steps(x_max - x_ref, steps_per_unit), coeffs=coeffs)
    curve = anchor_curve(curve, x_ref, F0, p0)
    xs, frames, points = curve.params, curve.frames, curve.points
    A = sphere_centers(curve).mean(axis=0)

    lo, hi = n_window
    sel = np.nonzero((xs >= lo) & (xs <= min(hi, x_max)))[0]
    v1 = frames[sel[0]] @ v1_coeffs(float(xs[sel[0]]), y0)
    gap = xs[sel] * np.linalg.norm(frames[sel] @ n_coeffs(y0) + v1, axis=1)
    mid = len(sel) // 2
    growth = float(np.max(gap[mid:]) / np.max(gap[:mid]))

    lo, hi = phase_window
    ph = np.nonzero((xs >= lo) & (xs <= min(hi, x_max)))[0][::sample_every]
    u = frames[ph[0]] @ u_coeffs(y0)
    Pc = np.eye(4) - _projector(u, v1)
    xi = frames[ph][:, :, 3]
    e1 = Pc @ xi[0]
    e1 /= np.linalg.norm(e1)
    e2 = Pc @ frames[ph[0]][:, 1]
    e2 -= (e2 @ e1) * e1
    e2 /= np.linalg.norm(e2)
    psi = np.unwrap(np.arctan2(xi @ e2, xi @ e1))
    w = _w_increments(xs[ph])
    rms = min(float(np.std(psi - s * w)) for s in (1.0, -1.0))

    # last full turn of w for the x -> inf circle
    win = w >= w[-1] - 2.0 * math.pi
    dw = np.gradient(w)[win]
    far = (points[ph][win] * dw[:, None]).sum(axis=0) / dw.sum()
    s = math.sqrt(1.0 + y0 * y0)
    far_gap = float(np.linalg.norm(far - (A - v1 / (2.0 * SQRT5 * s))))

    u0 = -math.log(x_ref)
    us, _, upts = _u_walk(F0, p0, x_ref, y0, u_max, _x_steps(u_max - u0, steps_per_unit), coeffs)
    near = upts[us >= u_max - 2.0 * math.pi / ANGULAR_SPEED].mean(axis=0)

    return XAsymptotics(
        y0=y0,
        n_gap_scaled_max=float(np.max(gap)),
        n_gap_growth=growth,
        xi_phase_rms=rms,
        near_center_perp=_perp(near - A, v1),
        far_center_perp=_perp(far - A, v1),
        far_center_gap=far_gap,
    )


# ---------------------------------------------------------------------------
# Origin, sphere centers and the distinguished gauge
# ---------------------------------------------------------------------------


def origin_limit(
    radii: Sequence[float] = (1e-3,),
    n_angles: int = 8,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    steps_per_unit: int = 100,
    coeffs: CoefficientField = conn_coeffs,
) -> OriginLimit:
    """
    f(0, 0) := -(1/2) v1(0) + A(0), and the largest distance to it from
    surface points at |(x, y)| = r for each r in radii.
    """
    angles = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_angles + 2)[1:-1]
    samples = [(float(r), float(r * math.cos(a)), float(r * math.sin(a))) for r in radii for a in angles]
    u0 = -math.log(x_ref)
    F_ref = _initial(init)

    x_deep = min(x for _, x, _ in samples)
    u_deep = -math.log(x_deep)
    _, frames, points = _u_walk(F_ref, np.zeros(4), x_ref, 0.0, u_deep, _x_steps(u_deep - u0, steps_per_unit), coeffs)
    A0 = points[-1] - frames[-1] @ x_point_coeffs(0.0)
    point = -0.5 * (frames[-1] @ v1_coeffs(x_deep, 0.0)) + A0

    gaps: Dict[float, float] = {}
    for r, x, y in samples:
        ux = -math.log(x)
        _, fr, pts = _u_walk(F_ref, np.zeros(4), x_ref, 0.0, ux, _x_steps(ux - u0, steps_per_unit), coeffs)
        Fx, px = fr[-1], pts[-1]
        if y != 0.0:
            lo, hi = (0.0, y) if y > 0 else (y, 0.0)
            c = anchor_curve(build_y_curve(x, (lo, hi), 16, coeffs=coeffs), 0.0, Fx, px)
            px = c.points[-1] if y > 0 else c.points[0]
        gaps[r] = max(gaps.get(r, 0.0), float(np.linalg.norm(px - point)))
    return OriginLimit(point=point, max_gap=gaps)


def a_curve_samples(
    y_range: Tuple[float, float] = (-3.0, 3.0),
    n: int = 600,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    coeffs: CoefficientField = conn_coeffs,
) -> np.ndarray:
    """A(y) = f(x_ref, y) - F w_x(y) along the y-curve at x_ref."""
    c = anchor_curve(build_y_curve(x_ref, y_range, n, coeffs=coeffs), 0.0, init)
    return np.array([p - F @ x_point_coeffs(float(y)) for p, F, y in zip(c.points, c.frames, c.params)])


def atilde_curve_samples(
    x_range: Tuple[float, float] = (1.0, 5.0),
    n: int = 400,
    init: Optional[Frame] = None,
    coeffs: CoefficientField = conn_coeffs,
) -> np.ndarray:
    """A~(x) = f(x, 0) - F w_y(x) along the x-curve y = 0, F = init at x_range[0]."""
    c = build_x_curve(0.0, x_range, n, init=init, coeffs=coeffs)
    return np.array([p - F @ y_point_coeffs(float(x)) for p, F, x in zip(c.points, c.frames, c.params)])


def plane_residual(samples: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> float:
    """max distance of samples - samples[0] from span(e1, e2)."""
    d = samples - samples[0]
    return float(np.max(np.linalg.norm(d - d @ _projector(e1, e2), axis=1)))


def a_curve_planarity(
    b_tilde: np.ndarray,
    c_tilde: np.ndarray,
    y_range: Tuple[float, float] = (-3.0, 3.0),
    n: int = 600,
    init: Optional[Frame] = None,
    x_ref: float = 1.0,
    coeffs: CoefficientField = conn_coeffs,
) -> float:
    return plane_residual(a_curve_samples(y_range, n, init, x_ref, coeffs), b_tilde, c_tilde)


def distinguished_gauge_shift(
    a_samples: np.ndarray,
    atilde_samples: np.ndarray,
    b_inf: np.ndarray,
    c_inf: np.ndarray,
    b_tilde: np.ndarray,
    c_tilde: np.ndarray,
) -> GaugeShift:
    """
    Translation t after which A(y) lies in span(b~, c~) and A~(x) in
    span(b, c), both through the origin: t = -(P_bc A + P_b~c~ A~).
    """
    P = _projector(b_inf, c_inf)
    Pt = _projector(b_tilde, c_tilde)
    p = (a_samples @ P).mean(axis=0)
    pt = (atilde_samples @ Pt).mean(axis=0)
    shift = -(p + pt)
    return GaugeShift(
        shift=shift,
        a_residual=float(np.max(np.linalg.norm((a_samples + shift) @ P, axis=1))),
        atilde_residual=float(np.max(np.linalg.norm((atilde_samples + shift) @ Pt, axis=1))),
    )
