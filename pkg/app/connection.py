# app/connection.py
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np

from .config import settings
from .errors import DomainError
from .models import ConnCoeffs, OmegaPair, PointClass, StepWeights
from .specfun import SQRT5, eval_x0, s2_distance

# (x, y) -> ConnCoeffs; the default provider is conn_coeffs below
CoefficientField = Callable[[float, float], ConnCoeffs]

COEFF_NAMES = ("a1", "b1", "c1", "a2", "b2", "c2")


@lru_cache(maxsize=1 << 18)
def conn_coeffs(x: float, y: float, tol: Optional[float] = None) -> ConnCoeffs:
    """
    The six connection coefficients at (x, y), x > 0.

    With P = X0 + sqrt5/2, g = X0'/x and h = 2 X0 - x^2 g + y^2 g + sqrt5:

        a1 =  2yP / (xh)                 a2 = -(2 X0 + sqrt5 - (x^2 + y^2) g) / h
        b1 = -(P + sqrt5 (x^2 - y^2)) / (xh)
        c1 = -2P / (xh)                  b2 = -2y (g/2 + sqrt5) / h
                                         c2 =  2y (X0'' - X0'/x) / h
    """
    if not x > 0:
        raise DomainError(f"connection coefficients need x > 0, got x={x!r}")
    e = eval_x0(x, tol)
    X = e.value
    g = e.d1_over_x
    P = X + 0.5 * SQRT5
    x2, y2 = x * x, y * y
    h = 2.0 * X - x2 * g + y2 * g + SQRT5
    xh = x * h
    return ConnCoeffs(
        a1=2.0 * y * P / xh,
        b1=-(P + SQRT5 * (x2 - y2)) / xh,
        c1=-2.0 * P / xh,
        a2=-(2.0 * X + SQRT5 - (x2 + y2) * g) / h,
        b2=-2.0 * y * (0.5 * g + SQRT5) / h,
        c2=2.0 * y * e.d2_minus_d1_over_x / h,
    )


def constant_field(**values: float) -> CoefficientField:
    """A connection with constant coefficients (unset ones are 0)."""
    unknown = set(values) - set(COEFF_NAMES)
    if unknown:
        raise ValueError(f"unknown coefficients: {sorted(unknown)}")
    c = ConnCoeffs(**{name: float(values.get(name, 0.0)) for name in COEFF_NAMES})

    def field(x: float, y: float) -> ConnCoeffs:
        return c

    return field


def coeff_vector(c: ConnCoeffs) -> np.ndarray:
    return np.array([c.a1, c.b1, c.c1, c.a2, c.b2, c.c2])


# ---------------------------------------------------------------------------
# Omega matrices
# ---------------------------------------------------------------------------


def omega1_matrix(c: ConnCoeffs) -> np.ndarray:
    w = np.zeros((4, 4))
    w[0, 1] = c.a1
    w[1, 2] = c.c1
    w[1, 3] = c.b1
    return w - w.T


def omega2_matrix(c: ConnCoeffs) -> np.ndarray:
    w = np.zeros((4, 4))
    w[0, 2] = c.a2
    w[2, 1] = c.c2
    w[2, 3] = c.b2
    return w - w.T


def omega(x: float, y: float, coeffs: CoefficientField = conn_coeffs) -> OmegaPair:
    """Omega_1, Omega_2 with dF = F (Omega_1 dx + Omega_2 dy)."""
    c = coeffs(x, y)
    return OmegaPair(omega1=omega1_matrix(c), omega2=omega2_matrix(c))


def omega_u(x: float, y: float, coeffs: CoefficientField = conn_coeffs) -> np.ndarray:
    """x-connection in u = -log x: -x * Omega_1, bounded as x -> 0."""
    return -x * omega1_matrix(coeffs(x, y))


def step_weights(x: float, y: float, tol: Optional[float] = None) -> StepWeights:
    """Densities of theta_1 = (x^2 - y^2)/(xh) dx and theta_2 = 2y/h dy."""
    if not x > 0:
        raise DomainError(f"step weights need x > 0, got x={x!r}")
    e = eval_x0(x, tol)
    g = e.d1_over_x
    h = 2.0 * e.value - x * x * g + y * y * g + SQRT5
    return StepWeights(
        theta1_density=(x * x - y * y) / (x * h),
        theta2_density=2.0 * y / h,
    )


# ---------------------------------------------------------------------------
# Finite-difference partials
# ---------------------------------------------------------------------------


def _richardson(fn: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """Central difference at 0 with one Richardson step, O(h^4)."""
    d_h = (fn(h) - fn(-h)) / (2.0 * h)
    d_h2 = (fn(0.5 * h) - fn(-0.5 * h)) / h
    return (4.0 * d_h2 - d_h) / 3.0


def _richardson2(fn: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    f0 = fn(0.0)
    d_h = (fn(h) - 2.0 * f0 + fn(-h)) / (h * h)
    hh = 0.5 * h
    d_h2 = (fn(hh) - 2.0 * f0 + fn(-hh)) / (hh * hh)
    return (4.0 * d_h2 - d_h) / 3.0


def coeff_partials(
    x: float,
    y: float,
    fd_step: Optional[float] = None,
    coeffs: CoefficientField = conn_coeffs,
    second: bool = False,
) -> Dict[str, np.ndarray]:
    """
    x- and y-partials of (a1, b1, c1, a2, b2, c2), each a 6-vector.
    Keys: "f", "dx", "dy" and, with second=True, "dxx", "dyy".
    """
    h = settings.fd_step if fd_step is None else fd_step
    if not x > h > 0:
        raise DomainError(f"finite differences need x > fd_step > 0, got x={x!r}, fd_step={h!r}")

    def along_x(s: float) -> np.ndarray:
        return coeff_vector(coeffs(x + s, y))

    def along_y(s: float) -> np.ndarray:
        return coeff_vector(coeffs(x, y + s))

    out = {
        "f": coeff_vector(coeffs(x, y)),
        "dx": _richardson(along_x, h),
        "dy": _richardson(along_y, h),
    }
    if second:
        # second differences lose h^-2 to rounding; use a wider step
        h2 = max(h, 1e-3)
        if not x > h2:
            h2 = 0.5 * x
        out["dxx"] = _richardson2(along_x, h2)
        out["dyy"] = _richardson2(along_y, h2)
    return out


def maurer_cartan_terms(
    x: float,
    y: float,
    fd_step: Optional[float] = None,
    coeffs: CoefficientField = conn_coeffs,
) -> Dict[str, float]:
    """The five flatness identities, each as LHS - RHS."""
    p = coeff_partials(x, y, fd_step, coeffs)
    a1, b1, c1, a2, b2, c2 = p["f"]
    dx = dict(zip(COEFF_NAMES, p["dx"]))
    dy = dict(zip(COEFF_NAMES, p["dy"]))
    return {
        "a1_y": dy["a1"] - a2 * c1,
        "a2_x": dx["a2"] - a1 * c2,
        "b1_y": dy["b1"] - b2 * c1,
        "b2_x": dx["b2"] - b1 * c2,
        "c_sum": dx["c2"] + dy["c1"] + a1 * a2 + b1 * b2,
    }


def maurer_cartan_residual(
    x: float,
    y: float,
    fd_step: Optional[float] = None,
    coeffs: CoefficientField = conn_coeffs,
) -> float:
    """max |LHS - RHS| over the five flatness identities."""
    terms = maurer_cartan_terms(x, y, fd_step, coeffs)
    return float(max(abs(v) for v in terms.values()))


# ---------------------------------------------------------------------------
# Singular sets
# ---------------------------------------------------------------------------


def classify_point(x: float, y: float, s2_tol: Optional[float] = None) -> PointClass:
    if not x > 0:
        return PointClass.OFF_DOMAIN
    if y == 0 or x * x == y * y:
        return PointClass.S1_DEGENERATE
    tol = settings.s2_tol if s2_tol is None else s2_tol
    if s2_distance(x, y) <= tol:
        return PointClass.S2_EXCLUDED
    return PointClass.REGULAR
