"""Tests for the coordinate curves, their spheres, cusps and the reflection."""
import math

import numpy as np
import pytest

from app.curves import (
    E_ALPHA,
    REFLECTION_B,
    anchor_curve,
    build_diagonal,
    build_x_curve,
    build_y_curve,
    center_drift,
    curve_sphere,
    detect_cusp,
    fit_sphere,
    fvec_coeffs,
    normalize_y_curve,
    reflect_to_Dminus,
    reflection_residual,
    sphere_centers,
    surface_points,
    u2_coeffs,
    u_coeffs,
    u_derivative_coeffs,
    utilde_coeffs,
    utilde_derivative_coeffs,
    x_point_coeffs,
    x_sphere_radius,
    y_sphere_radius,
)
from app.errors import DegenerateStepError, DomainError, InsufficientResolutionError
from app.integrator import sweep_grid
from app.models import CurveKind, GridSpec
from app.specfun import t_function


@pytest.fixture(scope="module")
def x_curve():
    return build_x_curve(1.0, (0.2, 3.0), 512)


@pytest.fixture(scope="module")
def y_curve():
    return build_y_curve(2.0, (-3.0, 3.0), 600)


def test_x_curve_lies_on_its_sphere(x_curve):
    fit = curve_sphere(x_curve)
    assert fit.radius == pytest.approx(x_sphere_radius(1.0), abs=1e-10)
    assert fit.max_radial_dev <= 1e-10
    assert fit.max_planar_dev <= 1e-10
    assert center_drift(x_curve) <= 1e-10


def test_x_curve_radius_at_y_zero():
    assert x_sphere_radius(0.0) == pytest.approx(0.5)
    c = build_x_curve(0.0, (0.01, 20.0), 1024)
    assert curve_sphere(c).radius == pytest.approx(0.5, abs=1e-10)


def test_y_curve_lies_on_its_sphere(y_curve):
    fit = curve_sphere(y_curve)
    assert fit.radius == pytest.approx(y_sphere_radius(2.0), abs=1e-10)
    assert fit.max_planar_dev <= 1e-10
    assert center_drift(y_curve) <= 1e-10
    with pytest.raises(InsufficientResolutionError):
        fit_sphere(y_curve.points[:3], fit.normal)


def test_constant_normals(x_curve, y_curve):
    u = x_curve.frames @ u_coeffs(1.0)
    assert float(np.max(np.abs(u - u[0]))) <= 1e-12
    ut = y_curve.frames @ utilde_coeffs(2.0)
    assert float(np.max(np.abs(ut - ut[0]))) <= 1e-12


def test_adapted_basis_is_orthonormal():
    for y in (-3.0, 0.0, 0.5, 4.0):
        G = np.column_stack([u_coeffs(y), E_ALPHA, fvec_coeffs(y), u2_coeffs(y)])
        np.testing.assert_allclose(G.T @ G, np.eye(4), atol=1e-15)
        assert np.linalg.norm(x_point_coeffs(y)) == pytest.approx(x_sphere_radius(y))


def test_trapezoid_points_drift_more_than_telescoping():
    tele = build_x_curve(1.0, (0.2, 3.0), 64)
    trap = build_x_curve(1.0, (0.2, 3.0), 64, method="trapezoid")
    assert center_drift(trap) > 100.0 * center_drift(tele)
    with pytest.raises(ValueError):
        build_x_curve(1.0, (0.2, 3.0), 64, method="euler")


def test_x_curve_preconditions():
    with pytest.raises(DomainError):
        build_x_curve(1.0, (0.0, 2.0), 16)
    with pytest.raises(DomainError):
        build_x_curve(1.0, (2.0, 2.0), 16)
    with pytest.raises(DomainError):
        build_y_curve(0.0, (-1.0, 1.0), 16)
    with pytest.raises(DegenerateStepError):
        build_x_curve(1.0, (0.5, 1.5), 4, direction="forward")
    with pytest.raises(ValueError):
        build_x_curve(1.0, (0.5, 1.5), 4, direction="sideways")


def test_forward_build_away_from_diagonal():
    fwd = build_x_curve(3.0, (0.5, 2.0), 64, direction="forward")
    tow = build_x_curve(3.0, (0.5, 2.0), 64)
    np.testing.assert_allclose(fwd.frames, tow.frames, atol=1e-14)


def test_stationary_point_is_a_node():
    c = build_x_curve(-1.5, (0.5, 2.5), 100)
    assert np.any(np.abs(c.params - 1.5) <= 1e-15)
    np.testing.assert_array_equal(c.frames[0], np.eye(4))


def test_cusp_on_x_curve():
    report = detect_cusp(build_x_curve(1.0, (0.5, 1.5), 1024), 1.0)
    assert report is not None
    np.testing.assert_allclose(report.exponents, (2.0, 3.0, 4.0), atol=0.2)


def test_cusp_on_y_curve():
    report = detect_cusp(build_y_curve(2.0, (-0.5, 0.5), 1024), 0.0)
    assert report is not None
    np.testing.assert_allclose(report.exponents, (2.0, 3.0, 4.0), atol=0.2)


@pytest.mark.parametrize("c", np.logspace(-2.0, math.log10(50.0), 7))
def test_no_cusp_on_x_axis_curve(c):
    flat = build_x_curve(0.0, (0.25 * c, 1.75 * c), 256)
    assert detect_cusp(flat, float(flat.params[128])) is None


def test_cusp_needs_resolution():
    coarse = build_x_curve(1.0, (0.5, 1.5), 16)
    with pytest.raises(InsufficientResolutionError):
        detect_cusp(coarse, 1.0)
    with pytest.raises(InsufficientResolutionError):
        detect_cusp(coarse, 1.01)


def test_diagonal():
    d = build_diagonal((1.0, 2.0), 64)
    assert d.diagonal.kind == CurveKind.DIAGONAL
    assert len(d.substitutes) == 64
    assert d.forward_stall <= 1e-12
    for k in d.substitutes:
        assert float(np.max(np.linalg.norm(k.points - k.points[0], axis=1))) > 1e-10
    with pytest.raises(DomainError):
        build_diagonal((0.0, 1.0), 8)
    with pytest.raises(DomainError):
        curve_sphere(d.diagonal)


def test_diagonal_substitutes_start_at_the_corners():
    d = build_diagonal((1.0, 2.0), 16)
    for i, k in enumerate(d.substitutes):
        np.testing.assert_allclose(k.points[0], d.diagonal.points[i], atol=1e-14)
        np.testing.assert_allclose(k.frames[0], d.diagonal.frames[i], atol=1e-14)


def test_surface_rows_lie_on_x_spheres():
    grid = GridSpec(x0=2.0, y0=1.0, a=1.0, n=8)
    frames = sweep_grid(grid, np.eye(4))
    pts = surface_points(grid, frames)
    assert pts.shape == (9, 9, 4)
    np.testing.assert_array_equal(pts[0, 0], np.zeros(4))
    for j in range(9):
        w = x_point_coeffs(grid.y_at(j))
        center = pts[0, j] - frames[0, j] @ w
        r = np.linalg.norm(pts[:, j] - center, axis=1)
        np.testing.assert_allclose(r, x_sphere_radius(grid.y_at(j)), atol=1e-12)
    with pytest.raises(ValueError):
        surface_points(grid, frames[:-1])


def test_u_derivative_norm():
    for x, y in ((0.5, -2.0), (1.5, 2.0), (4.0, 0.3)):
        v = u_derivative_coeffs(x, y)
        assert np.linalg.norm(v) == pytest.approx(y * y / (1.0 + y * y), abs=1e-6)


def test_utilde_derivative_norm():
    for x, y in ((0.5, 1.0), (2.0, 0.5), (6.0, -3.0)):
        v = utilde_derivative_coeffs(x, y)
        assert np.linalg.norm(v) == pytest.approx(t_function(x), rel=1e-6)
    with pytest.raises(DomainError):
        utilde_derivative_coeffs(0.0, 1.0)


def test_anchor_curve(x_curve, random_orthogonal):
    Q = random_orthogonal()
    p = np.array([1.0, -2.0, 0.5, 3.0])
    moved = anchor_curve(x_curve, 1.0, Q, p)
    k = int(np.argmin(np.abs(x_curve.params - 1.0)))
    np.testing.assert_allclose(moved.frames[k], Q, atol=1e-14)
    np.testing.assert_allclose(moved.points[k], p, atol=1e-14)
    A = sphere_centers(moved)
    assert float(np.max(np.linalg.norm(A - A[0], axis=1))) <= 1e-10
    with pytest.raises(DomainError):
        anchor_curve(x_curve, 1.0001)


def test_reflection_symmetry(y_curve):
    assert reflection_residual(y_curve) <= 1e-9
    norm = normalize_y_curve(y_curve)
    k = int(np.argmin(np.abs(norm.params)))
    np.testing.assert_allclose(norm.frames[k], np.eye(4), atol=1e-14)
    np.testing.assert_array_equal(REFLECTION_B @ REFLECTION_B, np.eye(4))
    with pytest.raises(DomainError):
        normalize_y_curve(build_x_curve(1.0, (0.5, 2.0), 16))


def test_reflect_to_other_half_is_an_involution(x_curve, y_curve):
    for c in (x_curve, y_curve):
        once = reflect_to_Dminus(c)
        assert once.side == -1
        back = reflect_to_Dminus(once)
        assert back.side == c.side
        assert back.fixed == c.fixed
        np.testing.assert_array_equal(back.params, c.params)
        np.testing.assert_array_equal(back.points, c.points)
    assert np.all(reflect_to_Dminus(x_curve).params < 0)
    assert reflect_to_Dminus(y_curve).fixed == -2.0


def test_y_sphere_on_other_half(y_curve):
    mirrored = reflect_to_Dminus(y_curve)
    assert curve_sphere(mirrored).radius == pytest.approx(curve_sphere(y_curve).radius)
    assert math.isfinite(center_drift(mirrored))


def test_adapted_basis_along_a_built_curve(x_curve):
    C = np.column_stack([u_coeffs(1.0), E_ALPHA, fvec_coeffs(1.0), u2_coeffs(1.0)])
    G = x_curve.frames @ C
    gram = np.swapaxes(G, 1, 2) @ G
    assert float(np.max(np.abs(gram - np.eye(4)))) <= 1e-12
