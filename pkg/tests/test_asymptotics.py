"""
Tests for the limits of the surface at x -> 0, x -> inf and y -> +-inf.
The full analyses walk tens of thousands of steps and are marked slow.
"""
import math

import numpy as np
import pytest

from app.asymptotics import (
    ANGULAR_SPEED,
    a_curve_planarity,
    a_curve_samples,
    asymptotic_u_analysis,
    asymptotic_x_analysis,
    asymptotic_y_analysis,
    build_u_curve,
    distinguished_gauge_shift,
    origin_limit,
    plane_residual,
    v_bounds,
    v_components,
    v_components_from_connection,
    v_envelope_margin,
)
from app.curves import x_point_coeffs
from app.errors import DomainError
from app.models import CurveKind


@pytest.mark.parametrize("y", [-3.0, 0.0, 0.5, 2.0, 10.0])
def test_limiting_rotation_speed(y):
    v2, v3 = v_components(0.0, y)
    assert math.hypot(v2, v3) == pytest.approx(ANGULAR_SPEED, abs=1e-12)


def test_v_components_agree_with_connection():
    for x in (0.05, 0.2, 0.45, 2.0):
        for y in (-2.0, 0.0, 1.0, 3.0):
            a = np.array(v_components(x, y))
            b = np.array(v_components_from_connection(x, y))
            np.testing.assert_allclose(a, b, atol=1e-10)


def test_v_envelopes_hold():
    assert v_envelope_margin(np.linspace(0.01, 0.49, 25), np.linspace(-5.0, 5.0, 41)) <= 0.0
    b2, b3 = v_bounds(0.0, 1.0)
    assert (b2, b3) == (0.0, 0.0)


def test_u_curve_stays_on_its_sphere():
    c = build_u_curve(0.5, (0.0, 3.0), 300)
    assert c.kind == CurveKind.U_CURVE
    assert c.params[0] == 0.0 and c.params[-1] == 3.0
    A = c.points - c.frames @ x_point_coeffs(0.5)
    assert float(np.max(np.linalg.norm(A - A[0], axis=1))) <= 1e-12


def test_u_walk_limits():
    with pytest.raises(DomainError):
        build_u_curve(0.0, (0.0, 20.0), 100)
    with pytest.raises(DomainError):
        build_u_curve(0.0, (2.0, 1.0), 100)
    with pytest.raises(DomainError):
        asymptotic_u_analysis([0.0], u_max=4.0)
    with pytest.raises(DomainError):
        asymptotic_u_analysis([])
    with pytest.raises(DomainError):
        asymptotic_y_analysis([1.0], y_max=10.0)
    with pytest.raises(DomainError):
        asymptotic_x_analysis(1.0, x_max=20.0)


def test_gauge_shift_on_synthetic_data(random_orthogonal, rng):
    Q = random_orthogonal()
    b, c, bt, ct = Q.T
    p = rng.standard_normal(4)
    s = rng.standard_normal((50, 2))
    A = p + np.outer(s[:, 0], bt) + np.outer(s[:, 1], ct)
    At = p + np.outer(s[:, 1], b) - np.outer(s[:, 0], c)
    gauge = distinguished_gauge_shift(A, At, b, c, bt, ct)
    np.testing.assert_allclose(gauge.shift, -p, atol=1e-12)
    assert gauge.a_residual <= 1e-12
    assert gauge.atilde_residual <= 1e-12
    assert plane_residual(A, bt, ct) <= 1e-12
    assert plane_residual(A + np.outer(s[:, 0], b), bt, ct) > 1e-3


def test_a_curve_planarity_matches_sampled_residual(random_orthogonal):
    Q = random_orthogonal()
    b, c = Q[:, 0], Q[:, 1]
    measured = a_curve_planarity(b, c, y_range=(-1.0, 1.0), n=64)
    expected = plane_residual(a_curve_samples((-1.0, 1.0), 64), b, c)
    assert measured == expected


@pytest.mark.slow
def test_x_to_zero_circles():
    circles = asymptotic_u_analysis([0.0, 1.0, 2.0])
    for y, speed in circles.speeds.items():
        assert speed == pytest.approx(ANGULAR_SPEED, abs=1e-3), y
    for y, norm in circles.v0_norms.items():
        assert norm == pytest.approx(ANGULAR_SPEED, abs=1e-8), y
    assert 2.0 * circles.gamma_radii[0.0][0] <= 1e-6
    for y in (1.0, 2.0):
        measured, expected = circles.gamma_radii[y]
        assert measured == pytest.approx(expected, rel=1e-2)
    assert max(circles.v1_gaps.values()) <= 1e-2
    assert circles.b_inf_spread <= 1e-3
    assert abs(float(circles.b_inf @ circles.c_inf)) <= 1e-12


@pytest.mark.slow
def test_y_to_infinity():
    ya = asymptotic_y_analysis([0.5, 2.0], y_max=50.0)
    assert ya.u_fit_residual <= 1e-2
    assert ya.v1_fit_residual <= 1e-2
    assert ya.u_utilde_max <= 1e-10
    assert ya.du_dy_max_err <= 1e-6
    assert ya.du_dy_fd_err <= 1e-2
    for x in (0.5, 2.0):
        assert ya.endpoint_gaps[x] <= 5e-3
        assert ya.endpoint_gaps[x] <= ya.endpoint_gaps_half[x]
        assert ya.endpoint_limit_gaps[x] <= 1e-2
    assert a_curve_planarity(ya.b_tilde_inf, ya.c_tilde_inf) <= 1e-3


@pytest.mark.slow
def test_x_to_infinity():
    xa = asymptotic_x_analysis(1.0)
    assert xa.n_gap_scaled_max <= 10.0
    assert xa.n_gap_growth <= 1.5
    assert xa.xi_phase_rms <= 0.1
    assert xa.near_center_perp <= 1e-2
    assert xa.far_center_perp <= 1e-2
    assert xa.far_center_gap <= 2e-2


@pytest.mark.slow
def test_origin_limit():
    limit = origin_limit(radii=(1e-2, 1e-3))
    assert limit.max_gap[1e-3] <= 1e-3
    assert limit.max_gap[1e-3] <= limit.max_gap[1e-2]
