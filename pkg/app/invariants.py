# app/invariants.py
"""
Named invariant checks. Each check returns one or more InvariantEntry rows
(measured <= bound passes); run_invariants collects them into a report.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .asymptotics import (
    _start_at,
    a_curve_planarity,
    a_curve_samples,
    asymptotic_u_analysis,
    asymptotic_x_analysis,
    asymptotic_y_analysis,
    atilde_curve_samples,
    distinguished_gauge_shift,
    origin_limit,
    plane_residual,
    v_components,
    v_components_from_connection,
    v_envelope_margin,
)
from .config import settings
from .connection import conn_coeffs, maurer_cartan_residual
from .curves import (
    E_ALPHA,
    anchor_curve,
    build_diagonal,
    build_x_curve,
    build_y_curve,
    center_drift,
    curve_sphere,
    detect_cusp,
    fvec_coeffs,
    reflect_to_Dminus,
    reflection_residual,
    u2_coeffs,
    u_coeffs,
    utilde_coeffs,
    x_sphere_radius,
    y_sphere_radius,
)
from .errors import FrameFieldError
from .integrator import (
    convergence_study,
    fit_order,
    orthogonality_stress,
    plaquette_defect,
    propagate,
)
from .models import CheckOptions, InvariantEntry, InvariantReport, LatticePath
from .specfun import (
    SQRT5,
    find_t2,
    g0_metric,
    g_first_integral,
    g_first_integral_alt,
    h_first_integral,
    h_weight,
    ode_residual,
    oscillation_residual,
    tau,
    tau_lower_bound_check,
)

logger = logging.getLogger(__name__)

CheckFn = Callable[[CheckOptions], List[InvariantEntry]]
CHECKS: Dict[str, CheckFn] = {}

DEFAULT_BOUNDS: Dict[str, float] = {
    "g-x0": 1e-9,
    "g-x1": 1e-8,
    "g-alt": 1e-9,
    "h-y": 1e-12,
    "ode": 1e-8,
    "tau-lower-bound": 0.0,
    "tau-limit": 0.01,
    "tau-monotone": 0.0,
    "oscillation": 1e-8,
    "h-bounds": 0.0,
    "h-near-axis": 0.0,
    "maurer-cartan": 1e-5,
    "orthogonality": 1e-12,
    "equivariance": 1e-12,
    "order-local": 0.15,
    "order-global": 0.15,
    "order-path": 0.15,
    "global-bound": 0.0,
    "x-sphere-radius": 1e-4,
    "x-sphere-half": 1e-6,
    "x-center-drift": 1e-4,
    "x-planarity": 1e-10,
    "y-sphere-radius": 1e-4,
    "y-center-drift": 1e-4,
    "utilde-constant": 1e-9,
    "u2-closure": 1e-12,
    "u-constant": 1e-9,
    "cusp-x": 0.2,
    "cusp-y": 0.2,
    "cusp-none": 0.0,
    "diagonal-tangency": 1e-3,
    "diagonal-velocity": 5e-3,
    "diagonal-stall": 1e-12,
    "diagonal-substitute": 0.0,
    "u-speed": 1e-3,
    "v0-norm": 1e-8,
    "gamma-point": 1e-6,
    "gamma-radius": 1e-2,
    "v1-limit": 1e-2,
    "b-inf-spread": 1e-3,
    "v-envelope": 0.0,
    "v-connection": 1e-10,
    "u-closed-form": 1e-2,
    "v1-closed-form": 1e-2,
    "u-utilde": 1e-10,
    "du-dy-norm": 1e-6,
    "du-dy-fd": 1e-2,
    "y-endpoints": 5e-3,
    "y-endpoints-shrink": 1.0,
    "y-endpoint-limit": 1e-2,
    "n-gap-bounded": 10.0,
    "n-gap-growth": 1.5,
    "xi-phase": 0.1,
    "center-line-near": 1e-2,
    "center-line-far": 1e-2,
    "far-center": 2e-2,
    "a-planarity": 1e-3,
    "atilde-planarity": 1e-3,
    "gauge-shift": 1e-3,
    "bounded": 1e3,
    "reflection": 1e-9,
    "reflect-round-trip": 0.0,
    "metric-symmetry": 1e-14,
    "origin-limit": 1e-3,
}


def check(name: str) -> Callable[[CheckFn], CheckFn]:
    def register(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn

    return register


class _Recorder:
    """Collects entries, resolving bounds from the defaults and the overrides."""

    def __init__(self, opts: CheckOptions):
        self.opts = opts
        self.entries: List[InvariantEntry] = []

    def bound(self, name: str) -> float:
        return float(self.opts.tolerances.get(name, DEFAULT_BOUNDS[name]))

    def add(self, name: str, measured: float, detail: str = "") -> None:
        bound = self.bound(name)
        measured = float(measured)
        self.entries.append(
            InvariantEntry(name=name, measured=measured, bound=bound, passed=bool(measured <= bound), detail=detail)
        )

    def at_least(self, name: str, value: float, floor: float) -> None:
        """Pass when value >= floor; the entry measures the shortfall."""
        self.add(name, floor - value, f"value {value:.6g}, floor {floor:.6g}")


# ---------------------------------------------------------------------------
# X0 and its scalars
# ---------------------------------------------------------------------------


@check("g-integrals")
def check_g_integrals(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    xs = np.linspace(-10.0, 10.0, 1000)
    rec.add("g-x0", max(abs(g_first_integral("X0", float(x)) + 5.0) for x in xs))
    xs1 = np.linspace(0.1, 10.0, 100)
    rec.add("g-x1", max(abs(g_first_integral("X1_c_sqrt5", float(x)) - 20.0) for x in xs1))
    rec.add(
        "g-alt",
        max(abs(g_first_integral_alt(float(x)) - g_first_integral("X0", float(x))) for x in xs),
    )
    rec.add("h-y", max(abs(h_first_integral(float(y)) + 20.0) for y in np.linspace(-5.0, 5.0, 41)))
    rec.add("ode", max(abs(ode_residual(float(x))) for x in np.linspace(0.0, 10.0, 201)))
    return rec.entries


@check("tau")
def check_tau(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    rec.at_least("tau-lower-bound", tau_lower_bound_check(10.0), 2.35)
    limit = SQRT5 / math.tanh(SQRT5 * math.pi / 4.0)
    rec.add("tau-limit", abs(tau(80.0) - limit), f"tau(80) vs sqrt5 coth(sqrt5 pi/4) = {limit:.6f}")
    taus = np.array([tau(float(x)) for x in np.linspace(0.1, 50.0, 500)])
    rec.add("tau-monotone", float(np.max(np.diff(taus))), "largest increase between samples")
    t2 = find_t2()
    xs = np.linspace(t2 + 0.05, 30.0, 200)
    rec.add("oscillation", max(abs(oscillation_residual(float(x))) for x in xs), f"t2 = {t2:.6f}")
    return rec.entries


@check("h-bounds")
def check_h_bounds(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    worst_band = -math.inf
    worst_axis = -math.inf
    for x in np.linspace(0.0, 0.49, 25):
        for y in np.linspace(-5.0, 5.0, 41):
            y2 = y * y
            h = h_weight(float(x), float(y))
            worst_band = max(worst_band, 5.0 + SQRT5 + y2 - h, h - (6.0 + SQRT5 + 2.0 * y2))
            gap = abs(h - h_weight(0.0, float(y)))
            worst_axis = max(worst_axis, gap - x * x * (1.0 + 2.0 * y2) / 7.0)
    rec.add("h-bounds", worst_band, "5 + sqrt5 + y^2 < h < 6 + sqrt5 + 2y^2 for x < 0.5")
    rec.add("h-near-axis", worst_axis, "|h(x,y) - h(0,y)| <= x^2 (1 + 2y^2) / 7")
    return rec.entries


# ---------------------------------------------------------------------------
# Connection and lattice propagation
# ---------------------------------------------------------------------------


@check("flatness")
def check_flatness(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    worst = 0.0
    for x in np.linspace(0.2, 5.0, 50):
        for y in np.linspace(-3.0, 3.0, 50):
            worst = max(worst, maurer_cartan_residual(float(x), float(y), fd_step=1e-4))
    rec.add("maurer-cartan", worst, "50 x 50 grid over [0.2, 5] x [-3, 3]")
    return rec.entries


@check("orthogonality")
def check_orthogonality(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    rec.add("orthogonality", orthogonality_stress(steps=opts.stress_steps), f"{opts.stress_steps} steps")
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    F, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    path = LatticePath.staircase(opts.grid.n)
    rotated = propagate(path, opts.grid, Q @ F)
    rec.add("equivariance", float(np.max(np.abs(rotated - Q @ propagate(path, opts.grid, F)))))
    return rec.entries


@check("order-local")
def check_order_local(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    deltas = np.logspace(-1, -3, 5)
    base = (opts.grid.x0, opts.grid.y0)
    defects = [plaquette_defect(base, float(d)) for d in deltas]
    p = fit_order(deltas, defects)
    rec.add("order-local", abs(p - 3.0), f"fitted exponent {p:.3f}")
    return rec.entries


@check("order-global")
def check_order_global(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    study = convergence_study(opts.grid, (8, 16, 32, 64, 128), progress=opts.progress)
    rec.add("order-global", abs(study.global_order - 1.0), f"fitted exponent {study.global_order:.3f}")
    rec.add("order-path", abs(study.path_order - 1.0), f"fitted exponent {study.path_order:.3f}")
    rows = [r for r in study.rows if r.n >= settings.min_order_n]
    excess = max(r.global_error - r.bound for r in rows)
    rec.add("global-bound", excess, f"K = {study.K.K:.4g}, n >= {settings.min_order_n}")
    return rec.entries


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


@check("spheres")
def check_spheres(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    radius_err = 0.0
    drift = 0.0
    planar = 0.0
    for y0 in (1.0, 2.0):
        c = build_x_curve(y0, (0.002, 100.0), 4096)
        fit = curve_sphere(c)
        radius_err = max(radius_err, abs(fit.radius - x_sphere_radius(y0)))
        drift = max(drift, center_drift(c))
        planar = max(planar, fit.max_planar_dev)
    half = curve_sphere(build_x_curve(0.0, (0.002, 100.0), 4096))
    rec.add("x-sphere-radius", radius_err, "y0 in {1, 2}")
    rec.add("x-sphere-half", abs(half.radius - 0.5), "y0 = 0")
    rec.add("x-center-drift", drift)
    rec.add("x-planarity", planar)

    radius_err = drift = turn = 0.0
    for x0 in (0.5, 2.0):
        c = build_y_curve(x0, (-5.0, 5.0), 2048)
        fit = curve_sphere(c)
        radius_err = max(radius_err, abs(fit.radius - y_sphere_radius(x0)))
        drift = max(drift, center_drift(c))
        ut = c.frames @ utilde_coeffs(x0)
        turn = max(turn, float(np.max(np.linalg.norm(ut - ut[0], axis=1))))
    rec.add("y-sphere-radius", radius_err, "x0 in {0.5, 2}")
    rec.add("y-center-drift", drift)
    rec.add("utilde-constant", turn)

    closure = turn = 0.0
    for y0 in (-2.0, 0.0, 1.0, 3.0):
        c = build_x_curve(y0, (0.05, 10.0), 2048)
        C = np.column_stack([u_coeffs(y0), E_ALPHA, fvec_coeffs(y0), u2_coeffs(y0)])
        G = c.frames @ C
        gram = np.swapaxes(G, 1, 2) @ G
        closure = max(closure, float(np.max(np.abs(gram - np.eye(4)))))
        u = G[:, :, 0]
        turn = max(turn, float(np.max(np.linalg.norm(u - u[0], axis=1))))
    rec.add("u2-closure", closure, "[u, X_alpha, f, u2] orthonormal along x-curves")
    rec.add("u-constant", turn, "x-curves y0 in {-2, 0, 1, 3}")
    return rec.entries


@check("cusps")
def check_cusps(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    target = np.array([2.0, 3.0, 4.0])

    def miss(report) -> float:
        if report is None:
            return math.inf
        return float(np.max(np.abs(np.array(report.exponents) - target)))

    xr = detect_cusp(build_x_curve(1.0, (0.5, 1.5), 1024), 1.0)
    rec.add("cusp-x", miss(xr), f"x-curve y0 = 1 at x = 1: {xr.exponents if xr else None}")
    yr = detect_cusp(build_y_curve(2.0, (-0.5, 0.5), 1024), 0.0)
    rec.add("cusp-y", miss(yr), f"y-curve x0 = 2 at y = 0: {yr.exponents if yr else None}")
    found = 0
    centers = np.logspace(-2.0, math.log10(50.0), 12)
    for c in centers:
        flat = build_x_curve(0.0, (0.25 * c, 1.75 * c), 256)
        found += detect_cusp(flat, float(flat.params[128])) is not None
    rec.add("cusp-none", found, f"x-curve y0 = 0, {len(centers)} points on [0.01, 50]")

    d = build_diagonal((1.0, 2.0), 2048)
    P, F, ys = d.diagonal.points, d.diagonal.frames, d.diagonal.params
    chord = (P[2:] - P[:-2]) / (ys[2:] - ys[:-2])[:, None]
    xb = F[1:-1, :, 2]
    cos = np.abs(np.sum(chord * xb, axis=1)) / np.linalg.norm(chord, axis=1)
    rec.add("diagonal-tangency", float(np.max(np.arccos(np.clip(cos, -1.0, 1.0)))), "radians")
    dens = np.array([2.0 * y / h_weight(float(y), float(y)) for y in ys[1:-1]])
    vel = np.linalg.norm(chord - dens[:, None] * xb, axis=1) / np.abs(dens)
    rec.add("diagonal-velocity", float(np.max(vel)), "relative to the y-partial")
    rec.add("diagonal-stall", d.forward_stall)
    moves = min(float(np.max(np.linalg.norm(k.points - k.points[0], axis=1))) for k in d.substitutes)
    rec.at_least("diagonal-substitute", moves, 1e-10)
    return rec.entries


# ---------------------------------------------------------------------------
# Asymptotics
# ---------------------------------------------------------------------------


@check("asymptotics")
def check_asymptotics(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    circles = asymptotic_u_analysis([0.0, 1.0, 2.0])
    rec.add("u-speed", max(abs(s - 0.5 * SQRT5) for s in circles.speeds.values()))
    rec.add("v0-norm", max(abs(v - 0.5 * SQRT5) for v in circles.v0_norms.values()))
    rec.add("gamma-point", 2.0 * circles.gamma_radii[0.0][0], "diameter of Gamma(u, 0)")
    rec.add(
        "gamma-radius",
        max(abs(m - e) / e for y, (m, e) in circles.gamma_radii.items() if y != 0.0),
        "relative",
    )
    rec.add("v1-limit", max(circles.v1_gaps.values()))
    rec.add("b-inf-spread", circles.b_inf_spread)

    rec.add("v-envelope", v_envelope_margin(np.linspace(0.01, 0.49, 25), np.linspace(-5.0, 5.0, 41)))
    worst = 0.0
    for x in (0.05, 0.2, 0.45):
        for y in (-2.0, 0.0, 1.0, 3.0):
            a = np.array(v_components(x, y))
            b = np.array(v_components_from_connection(x, y))
            worst = max(worst, float(np.max(np.abs(a - b))))
    rec.add("v-connection", worst)

    ya = asymptotic_y_analysis([0.5, 1.0, 2.0], y_max=50.0)
    rec.add("u-closed-form", ya.u_fit_residual)
    rec.add("v1-closed-form", ya.v1_fit_residual)
    rec.add("u-utilde", ya.u_utilde_max, "10 x 10 lattice")
    rec.add("du-dy-norm", ya.du_dy_max_err)
    rec.add("du-dy-fd", ya.du_dy_fd_err)
    rec.add("y-endpoints", max(ya.endpoint_gaps.values()), "Y = 50, averaged over one turn")
    rec.add(
        "y-endpoints-shrink",
        max(ya.endpoint_gaps[x] / ya.endpoint_gaps_half[x] for x in ya.endpoint_gaps),
        "gap at Y over gap at Y/2",
    )
    rec.add("y-endpoint-limit", max(ya.endpoint_limit_gaps.values()))

    xa = asymptotic_x_analysis(1.0)
    rec.add("n-gap-bounded", xa.n_gap_scaled_max, "max x |v1 + n| on [10, 100]")
    rec.add("n-gap-growth", xa.n_gap_growth)
    rec.add("xi-phase", xa.xi_phase_rms, "radians on [20, 100]")
    rec.add("center-line-near", xa.near_center_perp)
    rec.add("center-line-far", xa.far_center_perp)
    rec.add("far-center", xa.far_center_gap)

    rec.add("a-planarity", a_curve_planarity(ya.b_tilde_inf, ya.c_tilde_inf))
    A = a_curve_samples()
    At = atilde_curve_samples()
    rec.add("atilde-planarity", plane_residual(At, circles.b_inf, circles.c_inf))
    gauge = distinguished_gauge_shift(A, At, circles.b_inf, circles.c_inf, ya.b_tilde_inf, ya.c_tilde_inf)
    rec.add("gauge-shift", max(gauge.a_residual, gauge.atilde_residual))

    largest = 0.0
    for y0 in (-50.0, -5.0, 0.0, 5.0, 50.0):
        F0, p0 = _start_at(1.0, y0, None, 100, conn_coeffs)
        for rng, n in (((1e-3, 1.0), 1000), ((1.0, 100.0), 4000)):
            c = anchor_curve(build_x_curve(y0, rng, n), 1.0, F0, p0)
            largest = max(largest, float(np.max(np.linalg.norm(c.points, axis=1))))
    rec.add("bounded", largest if math.isfinite(largest) else math.inf, "max |f| over sampled x-curves")
    return rec.entries


# ---------------------------------------------------------------------------
# Reflection
# ---------------------------------------------------------------------------


@check("reflection")
def check_reflection(opts: CheckOptions) -> List[InvariantEntry]:
    rec = _Recorder(opts)
    worst = 0.0
    for x0 in (0.5, 2.0, 4.0):
        worst = max(worst, reflection_residual(build_y_curve(x0, (-3.0, 3.0), 600)))
    rec.add("reflection", worst, "B = diag(-1, 1, 1, 1)")

    trips = 0
    for c in (build_x_curve(1.0, (0.5, 2.0), 64), build_y_curve(2.0, (-1.0, 1.0), 64)):
        back = reflect_to_Dminus(reflect_to_Dminus(c))
        same = (
            back.side == c.side
            and back.fixed == c.fixed
            and np.array_equal(back.params, c.params)
            and np.array_equal(back.points, c.points)
        )
        trips += 0 if same else 1
    rec.add("reflect-round-trip", trips)

    worst = 0.0
    for x in np.linspace(0.1, 5.0, 20):
        for y in np.linspace(-3.0, 3.0, 13):
            a = np.array(g0_metric(float(x), float(y)))
            b = np.array(g0_metric(-float(x), float(y)))
            worst = max(worst, float(np.max(np.abs(a - b))))
    rec.add("metric-symmetry", worst, "g0(-x, y) = g0(x, y)")

    limit = origin_limit(radii=(1e-3,))
    rec.add("origin-limit", limit.max_gap[1e-3], "|(x, y)| = 1e-3")
    return rec.entries


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def run_invariants(
    only: Optional[Iterable[str]] = None,
    options: Optional[CheckOptions] = None,
) -> InvariantReport:
    """Run the named checks (all by default); a check that raises fails as one entry."""
    opts = options or CheckOptions()
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)}")

    report = InvariantReport()
    for name in names:
        logger.info("running check %s", name)
        try:
            entries = CHECKS[name](opts)
        except (FrameFieldError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.error("check %s failed: %s", name, e)
            entries = [InvariantEntry(name=name, measured=math.nan, bound=0.0, passed=False, detail=str(e))]
        report.entries.extend(entries)
        failed = [e.name for e in entries if not e.passed]
        if failed:
            logger.warning("check %s: %d failing entries (%s)", name, len(failed), ", ".join(failed))
    return report
