# app/specfun.py
"""
X0 and the scalar functions built from it.

X0 is the entire even series 5/2 + sum_k a_k x^(2k) with a_1 = 1 and
2(k+1)(4k^2+5/4) a_(k+1) + (2k-1) a_k = 0. Its terms grow like e^|x| before
they decay, so evaluation runs in three tiers:

  1. compensated double summation,
  2. double-double summation when the double error estimate is too large
     (always for |x| > settings.dd_switch),
  3. continuation by the linear ODE x X''' - X'' + (x + 9/(4x)) X' - X = 0
     for |x| > settings.far_field_switch, seeded by tier 2.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .config import settings
from .ddarith import DD, Accumulator, two_prod
from .errors import DomainError, NonConvergenceError, SingularInputError
from .models import DerivedScalars, PhiPair, X0Eval

logger = logging.getLogger(__name__)

SQRT5 = math.sqrt(5.0)
_EPS = 2.0 ** -53
_EPS_DD = 2.0 ** -104


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


def coefficient_ratio(k: int) -> Fraction:
    """a_(k+1) / a_k."""
    return Fraction(-2 * (2 * k - 1), (k + 1) * (16 * k * k + 5))


@lru_cache(maxsize=None)
def x0_series_coefficients(count: int) -> Tuple[Fraction, ...]:
    """Exact a_1 .. a_count."""
    coeffs: List[Fraction] = [Fraction(1)]
    for k in range(1, count):
        coeffs.append(coeffs[-1] * coefficient_ratio(k))
    return tuple(coeffs)


@lru_cache(maxsize=None)
def _ratios_double(count: int) -> Tuple[float, ...]:
    return tuple(float(coefficient_ratio(k)) for k in range(1, count + 1))


@lru_cache(maxsize=None)
def _ratios_dd(count: int) -> Tuple[DD, ...]:
    return tuple(DD.from_fraction(coefficient_ratio(k)) for k in range(1, count + 1))


# ---------------------------------------------------------------------------
# Series tiers
# ---------------------------------------------------------------------------


def _series_double(x: float, tol: float, max_terms: int) -> X0Eval:
    z = x * x
    ratios = _ratios_double(max_terms)

    val = Accumulator()
    d1x = Accumulator()
    d2 = Accumulator()
    c2 = Accumulator()
    d3x = Accumulator()

    p = 1.0
    small_run = 0
    tail = 0.0
    k = 0
    for k in range(1, max_terms + 1):
        r = ratios[k - 1]
        two_k = 2.0 * k
        t_val = z * p
        t_d2 = two_k * (two_k - 1.0) * p
        t_d3 = (two_k + 2.0) * (two_k + 1.0) * two_k * r * p
        val.add(t_val)
        d1x.add(two_k * p)
        d2.add(t_d2)
        c2.add(two_k * (two_k - 2.0) * p)
        d3x.add(t_d3)

        mag = max(abs(t_val), abs(t_d2), abs(t_d3) * max(1.0, abs(x)))
        scale = 0.25 * tol * max(1.0, abs(2.5 + val.value))
        rho = abs(z * r)
        if mag < scale and rho < 0.5:
            small_run += 1
            if small_run >= 2:
                tail = 2.0 * mag
                break
        else:
            small_run = 0
        p = p * z * r
    else:
        raise NonConvergenceError(
            f"X0 series did not converge in {max_terms} terms at x={x!r}"
        )

    rounding = (k + 2) * _EPS * (val.mass + d2.mass + d3x.mass * max(1.0, abs(x)))
    value = 2.5 + val.value
    g = d1x.value
    return X0Eval(
        x=x,
        value=value,
        d1=x * g,
        d1_over_x=g,
        d2=d2.value,
        d3=x * d3x.value,
        d2_minus_d1_over_x=c2.value,
        terms_used=k,
        est_error=tail + rounding,
        method="double",
    )


def _series_dd(x: float, tol: float, max_terms: int) -> Tuple[X0Eval, Tuple[DD, DD, DD]]:
    """Double-double tier; also returns (X, X', X'') in double-double."""
    z = DD(*two_prod(x, x))
    ratios = _ratios_dd(max_terms)

    val = DD(0.0)
    d1x = DD(0.0)
    d2 = DD(0.0)
    c2 = DD(0.0)
    d3x = DD(0.0)
    mass = 0.0

    p = DD(1.0)
    small_run = 0
    tail = 0.0
    k = 0
    for k in range(1, max_terms + 1):
        r = ratios[k - 1]
        two_k = 2.0 * k
        t_val = z * p
        t_d2 = p * (two_k * (two_k - 1.0))
        t_d3 = (r * p) * ((two_k + 2.0) * (two_k + 1.0) * two_k)
        val = val + t_val
        d1x = d1x + p * two_k
        d2 = d2 + t_d2
        c2 = c2 + p * (two_k * (two_k - 2.0))
        d3x = d3x + t_d3

        mag = max(abs(float(t_val)), abs(float(t_d2)), abs(float(t_d3)) * max(1.0, abs(x)))
        mass += mag
        scale = 0.25 * tol * max(1.0, abs(2.5 + float(val)))
        rho = abs(float(z) * float(r))
        if mag < scale and rho < 0.5:
            small_run += 1
            if small_run >= 2:
                tail = 2.0 * mag
                break
        else:
            small_run = 0
        p = p * z * r
    else:
        raise NonConvergenceError(
            f"X0 series (double-double) did not converge in {max_terms} terms at x={x!r}"
        )

    value_dd = val + 2.5
    value = float(value_dd)
    rounding = (k + 2) * _EPS_DD * mass + 0.5 * math.ulp(value)
    ev = X0Eval(
        x=x,
        value=value,
        d1=x * float(d1x),
        d1_over_x=float(d1x),
        d2=float(d2),
        d3=x * float(d3x),
        d2_minus_d1_over_x=float(c2),
        terms_used=k,
        est_error=tail + rounding,
        method="double-double",
    )
    return ev, (value_dd, d1x * x, d2)


def _ode_rhs(x: float, state: np.ndarray) -> np.ndarray:
    X, dX, d2X = state
    d3X = (d2X - (x + 9.0 / (4.0 * x)) * dX + X) / x
    return np.array([dX, d2X, d3X])


@lru_cache(maxsize=8)
def _far_field(x_switch: float, x_max: float, tol: float):
    """Dense ODE continuation of X0 on [x_switch, x_max], computed once."""
    seed, (v, d1, d2) = _series_dd(x_switch, tol, settings.series_max_terms)
    y0 = np.array([float(v), float(d1), float(d2)])
    logger.debug("Continuing X0 by its ODE from x=%s to x=%s", x_switch, x_max)
    sol = solve_ivp(
        _ode_rhs,
        (x_switch, x_max),
        y0,
        method="DOP853",
        rtol=1e-13,
        atol=1e-13,
        dense_output=True,
    )
    if not sol.success:
        raise NonConvergenceError(f"far-field continuation of X0 failed: {sol.message}")
    return sol.sol, seed


def _eval_far(x: float, tol: float) -> X0Eval:
    dense, seed = _far_field(settings.far_field_switch, settings.x_max, tol)
    X, dX, d2X = (float(v) for v in dense(x))
    d3X = (d2X - (x + 9.0 / (4.0 * x)) * dX + X) / x
    g = dX / x
    span = x - settings.far_field_switch
    est = seed.est_error + 1e-13 * max(1.0, abs(X)) * (1.0 + span)
    return X0Eval(
        x=x,
        value=X,
        d1=dX,
        d1_over_x=g,
        d2=d2X,
        d3=d3X,
        d2_minus_d1_over_x=d2X - g,
        terms_used=seed.terms_used,
        est_error=est,
        method="far-field",
    )


@lru_cache(maxsize=1 << 16)
def _eval_abs(ax: float, tol: float) -> X0Eval:
    max_terms = settings.series_max_terms
    if ax > settings.far_field_switch:
        return _eval_far(ax, tol)

    if ax <= settings.dd_switch:
        ev = _series_double(ax, tol, max_terms)
        if ev.est_error <= tol * max(1.0, abs(ev.value)):
            return ev
        logger.debug("X0(%s): double estimate %.3g too large, using double-double", ax, ev.est_error)

    ev, _ = _series_dd(ax, tol, max_terms)
    if ev.est_error > tol * max(1.0, abs(ev.value)):
        raise NonConvergenceError(
            f"X0({ax!r}): tolerance {tol:g} unreachable (estimate {ev.est_error:.3g})"
        )
    return ev


def eval_x0(x: float, tol: Optional[float] = None) -> X0Eval:
    """
    X0 and its first three derivatives at x, plus X0'/x and X0'' - X0'/x
    computed as their own series so that neither cancels near 0.

    `tol` is relative to max(1, |X0|); est_error is the absolute bound.
    """
    tol = settings.series_tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not math.isfinite(x) or abs(x) > settings.x_max:
        raise DomainError(f"|x| must not exceed {settings.x_max}, got {x!r}")

    ev = _eval_abs(abs(float(x)), float(tol))
    if x >= 0:
        return ev
    # even: value, X0'/x, X0'', C2; odd: X0', X0'''
    return ev.model_copy(update={"x": float(x), "d1": -ev.d1, "d3": -ev.d3})


# ---------------------------------------------------------------------------
# First integrals and self-checks
# ---------------------------------------------------------------------------


def g_first_integral(kind: str, x: float, tol: Optional[float] = None) -> float:
    """
    G^{X1}(x) = (X1'')^2 + 4c X1 + (1 + 9/(4x^2)) (X1')^2 + ((2/x) X2 - 4cx) X1'
    with X2 = -X1'' - X1 + c x^2, assembled through X1'/x.

    kind "X0":          X1 = X0, c = 0 (value -5)
    kind "X1_c_sqrt5":  X1 = X0 + sqrt5 (x^2 + 5/2), c = sqrt5 (value 20)
    """
    e = eval_x0(x, tol)
    if kind == "X0":
        c = 0.0
        X1 = e.value
        X1pp = e.d2
        g1 = e.d1_over_x
    elif kind == "X1_c_sqrt5":
        c = SQRT5
        X1 = e.value + SQRT5 * (x * x + 2.5)
        X1pp = e.d2 + 2.0 * SQRT5
        g1 = e.d1_over_x + 2.0 * SQRT5
    else:
        raise ValueError(f"unknown first-integral kind {kind!r}")

    X2 = -X1pp - X1 + c * x * x
    return (
        X1pp * X1pp
        + 4.0 * c * X1
        + (x * x + 2.25) * g1 * g1
        + 2.0 * X2 * g1
        - 4.0 * c * x * x * g1
    )


def g_first_integral_alt(x: float, tol: Optional[float] = None) -> float:
    """G^{X0} as (X0'' - X0'/x)^2 + (1 + 5/(4x^2)) (X0')^2 - 2 X0 (X0'/x)."""
    e = eval_x0(x, tol)
    g = e.d1_over_x
    c2 = e.d2_minus_d1_over_x
    return c2 * c2 + (x * x + 1.25) * g * g - 2.0 * e.value * g


def h_first_integral(y: float, c: float = SQRT5) -> float:
    """H^Y(y) = (Y' - 2cy)^2 + (Y - cy^2 + 2c)^2 - 4c^2 for Y = c(y^2 - 2)."""
    Y = c * (y * y - 2.0)
    dY = 2.0 * c * y
    return (dY - 2.0 * c * y) ** 2 + (Y - c * y * y + 2.0 * c) ** 2 - 4.0 * c * c


def ode_residual(x: float, tol: Optional[float] = None) -> float:
    """x X0''' - X0'' + (x + 9/(4x)) X0' - X0, finite at 0."""
    e = eval_x0(x, tol)
    return x * e.d3 - e.d2 + x * e.d1 + 2.25 * e.d1_over_x - e.value


# ---------------------------------------------------------------------------
# tau, m and the oscillation representation
# ---------------------------------------------------------------------------


def _require_positive(x: float, what: str) -> None:
    if not x > 0:
        raise DomainError(f"{what} needs x > 0, got {x!r}")


def tau(x: float, tol: Optional[float] = None) -> float:
    _require_positive(x, "tau")
    e = eval_x0(x, tol)
    return (e.value + e.d2) / x


def m_factor(x: float) -> float:
    _require_positive(x, "m")
    return math.sqrt(1.0 + 9.0 / (4.0 * x * x))


def tau_lower_bound_check(x: float, tol: Optional[float] = None) -> float:
    """((1 + 9/(4x^2))^(-1/2) - 9/x^3) * tau(x), a lower bound for tau(inf)."""
    _require_positive(x, "tau_lower_bound_check")
    return (1.0 / m_factor(x) - 9.0 / x ** 3) * tau(x, tol)


def oscillation_residual(x: float, tol: Optional[float] = None) -> float:
    """(X0'')^2 + m^2 (X0' - tau/m^2)^2 - ((tau/m)^2 - 5)."""
    e = eval_x0(x, tol)
    t = tau(x, tol)
    m = m_factor(x)
    m2 = m * m
    return e.d2 ** 2 + m2 * (e.d1 - t / m2) ** 2 - ((t / m) ** 2 - 5.0)


def _osc_margin(x: float) -> float:
    return (tau(x) / m_factor(x)) ** 2 - 5.0


@lru_cache(maxsize=4)
def find_t2(x_hi: float = 50.0, step: float = 0.05) -> float:
    """Smallest x after which (tau/m)^2 > 5 holds on the scanned range."""
    xs = np.arange(step, x_hi + 0.5 * step, step)
    margins = np.array([_osc_margin(float(v)) for v in xs])
    bad = np.nonzero(margins <= 0.0)[0]
    if len(bad) == 0:
        return float(xs[0])
    last = int(bad[-1])
    if last + 1 >= len(xs):
        raise NonConvergenceError(f"(tau/m)^2 - 5 is not positive at the end of [0, {x_hi}]")
    return float(brentq(_osc_margin, float(xs[last]), float(xs[last + 1]), xtol=1e-12))


# ---------------------------------------------------------------------------
# Metric, phi and the derived scalars
# ---------------------------------------------------------------------------


def h_weight(x: float, y: float, tol: Optional[float] = None) -> float:
    """h(x,y) = 2 X0 - x X0' + y^2 X0'/x + sqrt5."""
    e = eval_x0(x, tol)
    g = e.d1_over_x
    return 2.0 * e.value - x * x * g + y * y * g + SQRT5


def b2c2_norm_sq(x: float, tol: Optional[float] = None) -> float:
    e = eval_x0(x, tol)
    b2 = -0.5 * e.d1_over_x - SQRT5
    c2 = e.d2_minus_d1_over_x
    return b2 * b2 + c2 * c2


def b2c2_closed_form(x: float, tol: Optional[float] = None) -> float:
    """(X0'/x)(2 X0 - x X0' - X0'/x + sqrt5); equals B2^2 + C2^2."""
    e = eval_x0(x, tol)
    g = e.d1_over_x
    return g * (2.0 * e.value - x * x * g - g + SQRT5)


def g0_metric(x: float, y: float, tol: Optional[float] = None) -> Tuple[float, float]:
    """Diagonal entries ((x^2 - y^2)^2 / (x^2 h^2), 4 y^2 / h^2) of g0."""
    if x == 0:
        raise DomainError("g0 diverges on x = 0")
    h = h_weight(x, y, tol)
    return ((x * x - y * y) ** 2 / (x * x * h * h), 4.0 * y * y / (h * h))


def phi_pair(x: float, y: float) -> PhiPair:
    r2 = x * x + y * y
    if r2 == 0:
        raise DomainError("phi has a pole at the origin")
    branch = math.atan2(2.0 * x * y, x * x - y * y) if x != 0 else math.nan
    return PhiPair(
        cos_phi=(x * x - y * y) / r2,
        sin_phi=2.0 * x * y / r2,
        phi_z=y / r2,
        phi_branch=branch,
    )


def t_times_x(x: float, tol: Optional[float] = None) -> float:
    """x * T(x); tends to sqrt5/2 at 0."""
    e = eval_x0(x, tol)
    g = e.d1_over_x
    X = e.value
    return (g + 2.0 * SQRT5) * (2.0 * X + SQRT5) / (
        4.0 * g * (2.0 * X - x * x * g - g + SQRT5)
    )


def t_function(x: float, tol: Optional[float] = None) -> float:
    """T(x) = ||d u~/dx||."""
    _require_positive(x, "T")
    return t_times_x(x, tol) / x


def q_function(x: float, tol: Optional[float] = None) -> float:
    """q(x) = 2 (x / X0') sqrt(B2^2 + C2^2)."""
    e = eval_x0(x, tol)
    return 2.0 * math.sqrt(b2c2_norm_sq(x, tol)) / e.d1_over_x


def _w_integrand(t: float) -> float:
    e = eval_x0(t)
    return t / (2.0 * e.value - t * t * e.d1_over_x)


def _wtilde_integrand(t: float) -> float:
    if t == 0.0:
        return 0.0
    return (t_times_x(t) - 0.5 * SQRT5) / t


def _integrate(fn, x: float, what: str) -> float:
    limit = max(50, int(4 * x) + 50)
    val, err = quad(fn, 0.0, x, epsabs=1e-10, epsrel=1e-10, limit=limit)
    if err > 1e-8:
        logger.warning("%s(%s): quadrature error estimate %.2g", what, x, err)
    return float(val)


@lru_cache(maxsize=4096)
def w_function(x: float) -> float:
    """w(x) = sqrt5 * int_0^x t / (2 X0 - t X0') dt."""
    _require_positive(x, "w")
    return SQRT5 * _integrate(_w_integrand, x, "w")


@lru_cache(maxsize=4096)
def wtilde_function(x: float) -> float:
    """w~(x) = (sqrt5/2) log x + int_0^x (T(t) - sqrt5/(2t)) dt."""
    _require_positive(x, "w~")
    return 0.5 * SQRT5 * math.log(x) + _integrate(_wtilde_integrand, x, "w~")


def s2_function(x: float, y: float, tol: Optional[float] = None) -> float:
    """(x^2 + y^2) X0' - (2 X0 + sqrt5) x; zero exactly on S2."""
    e = eval_x0(x, tol)
    return (x * x + y * y) * e.d1 - (2.0 * e.value + SQRT5) * x


def s2_distance(x: float, y: float, tol: Optional[float] = None) -> float:
    """|S2 defining function| / |its gradient|, a first-order distance to S2."""
    e = eval_x0(x, tol)
    r2 = x * x + y * y
    value = r2 * e.d1 - (2.0 * e.value + SQRT5) * x
    grad = math.hypot(r2 * e.d2 - (2.0 * e.value + SQRT5), 2.0 * y * e.d1)
    return abs(value) / grad if grad > 0 else abs(value)


def derived_scalars(
    x: float,
    y: float,
    tol: Optional[float] = None,
    strict: bool = False,
) -> DerivedScalars:
    """
    Every scalar of the construction at (x, y). Scalars whose inputs hit their
    excluded set come back as NaN and are named in `singular`; with
    strict=True the first such hit raises SingularInputError instead.
    """
    e = eval_x0(x, tol)
    X = e.value
    g = e.d1_over_x
    P = X + 0.5 * SQRT5
    x2, y2 = x * x, y * y
    r2 = x2 + y2
    singular: List[str] = []

    def excluded(name: str, reason: str) -> float:
        if strict:
            raise SingularInputError(name, f"{name} is undefined at ({x}, {y}): {reason}")
        singular.append(name)
        return math.nan

    h = 2.0 * X - x2 * g + y2 * g + SQRT5
    B2 = -0.5 * g - SQRT5
    C2 = e.d2_minus_d1_over_x

    if x > 0:
        tau_v = (X + e.d2) / x
        m_v = m_factor(x)
        T_v = t_times_x(x, tol) / x
        w_v = w_function(x)
        wt_v = wtilde_function(x)
    else:
        reason = "x <= 0"
        tau_v = excluded("tau", reason)
        m_v = excluded("m", reason)
        T_v = excluded("T", reason)
        w_v = excluded("w", reason)
        wt_v = excluded("wtilde", reason)

    if x2 != y2:
        B1 = -P / (x2 - y2) - SQRT5
        C1 = -2.0 * P / (x2 - y2)
        k1 = 2.0 * y * P / (x2 - y2)
    else:
        reason = "x^2 = y^2 (S1)"
        B1 = excluded("B1", reason)
        C1 = excluded("C1", reason)
        k1 = excluded("kappa1", reason)

    if y != 0:
        k2 = (0.5 * r2 * g - P) / y
        if s2_distance(x, y, tol) <= settings.s2_tol:
            # kappa2 vanishes on S2
            if strict:
                raise SingularInputError("kappa2", f"({x}, {y}) lies on S2")
            singular.append("kappa2:S2")
    else:
        k2 = excluded("kappa2", "y = 0 (S1)")

    if r2 > 0:
        k3 = -y * (2.0 * (X - x * e.d1) + SQRT5) / r2
        Pinv = x * h / r2
        Pinv_z = ((x2 - y2) * P + 2.0 * x * y2 * e.d1) / (r2 * r2) + SQRT5
    else:
        reason = "origin"
        k3 = excluded("kappa3", reason)
        Pinv = excluded("Pinv", reason)
        Pinv_z = excluded("Pinv_z", reason)

    q_v = q_function(x, tol)

    return DerivedScalars(
        x=x,
        y=y,
        tau=tau_v,
        m=m_v,
        h=h,
        B1=B1,
        C1=C1,
        B2=B2,
        C2=C2,
        kappa1=k1,
        kappa2=k2,
        kappa3=k3,
        Pinv=Pinv,
        Pinv_z=Pinv_z,
        T=T_v,
        q=q_v,
        w=w_v,
        wtilde=wt_v,
        singular=singular,
    )
