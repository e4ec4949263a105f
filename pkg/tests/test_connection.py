"""Tests for the connection coefficients and the Omega matrices."""
import numpy as np
import pytest
from scipy.optimize import brentq

from app.connection import (
    conn_coeffs,
    constant_field,
    maurer_cartan_residual,
    maurer_cartan_terms,
    classify_point,
    omega,
    omega1_matrix,
    omega2_matrix,
    omega_u,
    step_weights,
)
from app.errors import DomainError
from app.models import PointClass
from app.specfun import s2_function


def test_requires_positive_x():
    with pytest.raises(DomainError):
        conn_coeffs(0.0, 1.0)
    with pytest.raises(DomainError):
        conn_coeffs(-1.0, 1.0)
    with pytest.raises(DomainError):
        step_weights(0.0, 0.5)


@pytest.mark.parametrize("x,y", [(0.3, -2.0), (1.0, 0.5), (2.0, 1.0), (6.0, 3.0)])
def test_omega_structure(x, y):
    c = conn_coeffs(x, y)
    for om, nu2 in ((omega1_matrix(c), c.nu1_sq), (omega2_matrix(c), c.nu2_sq)):
        np.testing.assert_allclose(om + om.T, 0.0, atol=0.0)
        np.testing.assert_allclose(om @ om @ om, -nu2 * om, atol=1e-12 * max(1.0, nu2) ** 1.5)


def test_omega_pair_matches_matrices():
    c = conn_coeffs(2.0, 1.0)
    pair = omega(2.0, 1.0)
    np.testing.assert_array_equal(pair.omega1, omega1_matrix(c))
    np.testing.assert_array_equal(pair.omega2, omega2_matrix(c))
    np.testing.assert_array_equal(omega_u(2.0, 1.0), -2.0 * omega1_matrix(c))


def test_a2_on_the_x_axis():
    for x in (0.1, 1.0, 5.0, 40.0):
        assert conn_coeffs(x, 0.0).a2 == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("x,y", [(0.5, 1.3), (2.0, 0.7), (3.0, 2.2), (8.0, 4.5)])
def test_coefficient_parity_in_y(x, y):
    p, m = conn_coeffs(x, y), conn_coeffs(x, -y)
    for name in ("a1", "b2", "c2"):
        assert getattr(m, name) == pytest.approx(-getattr(p, name), rel=1e-13, abs=1e-15), name
    for name in ("b1", "c1", "a2"):
        assert getattr(m, name) == pytest.approx(getattr(p, name), rel=1e-13, abs=1e-15), name


def test_omega2_pattern_on_the_x_axis():
    for x in (0.2, 1.5, 6.0):
        om = omega2_matrix(conn_coeffs(x, 0.0))
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 2] = mask[2, 0] = True
        np.testing.assert_array_equal(om != 0.0, mask)
        assert om[0, 2] == pytest.approx(-1.0, abs=1e-14)


def test_flatness_on_e():
    assert maurer_cartan_residual(2.0, 1.0) <= 1e-6
    assert maurer_cartan_residual(2.7, 1.8) <= 1e-6


def test_flatness_near_axis():
    terms = maurer_cartan_terms(0.3, -2.0, fd_step=1e-5)
    assert set(terms) == {"a1_y", "a2_x", "b1_y", "b2_x", "c_sum"}
    assert max(abs(v) for v in terms.values()) <= 1e-5


def test_flatness_fails_for_generic_constant_field():
    # constant coefficients with a2 * c1 != 0 violate a1_y = a2 c1
    field = constant_field(a1=1.0, c1=1.0, a2=1.0)
    assert maurer_cartan_residual(1.0, 0.0, coeffs=field) == pytest.approx(1.0, abs=1e-9)


def test_constant_field():
    field = constant_field(a1=2.0, c2=-1.0)
    c = field(5.0, 5.0)
    assert (c.a1, c.b1, c.c1, c.a2, c.b2, c.c2) == (2.0, 0.0, 0.0, 0.0, 0.0, -1.0)
    with pytest.raises(ValueError):
        constant_field(zz=1.0)


def test_step_density_vanishes_on_diagonal():
    for y in (0.5, 1.0, 3.0):
        w = step_weights(y, y)
        assert w.theta1_density == 0.0
        assert w.theta2_density > 0.0
    assert step_weights(2.0, 0.0).theta2_density == 0.0


def test_classify_point():
    assert classify_point(0.0, 1.0) == PointClass.OFF_DOMAIN
    assert classify_point(-1.0, 1.0) == PointClass.OFF_DOMAIN
    assert classify_point(1.0, 0.0) == PointClass.S1_DEGENERATE
    assert classify_point(1.0, -1.0) == PointClass.S1_DEGENERATE
    assert classify_point(2.0, 1.0) == PointClass.REGULAR

    y = brentq(lambda t: s2_function(1.0, t), 1.5, 2.5, xtol=1e-15)
    assert classify_point(1.0, y) == PointClass.S2_EXCLUDED
