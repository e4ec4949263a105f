"""
Tests for the Cayley-type lattice integrator: single steps, paths, the full
grid sweep, and convergence against the high-order reference.
"""
import math

import numpy as np
import pytest
from scipy.linalg import expm

from app.connection import conn_coeffs, constant_field, omega1_matrix, omega2_matrix
from app.errors import DomainError, InsufficientResolutionError, PathOutOfGridError
from app.integrator import (
    canonical_frames,
    cayley_factors,
    convergence_study,
    estimate_K,
    fit_order,
    global_bound,
    orthogonality_defect,
    orthogonality_stress,
    plaquette_defect,
    propagate,
    reference_frame,
    step_matrix,
    step_u,
    step_x,
    step_y,
    sweep_grid,
)
from app.models import GridSpec, LatticePath


def test_cayley_factors():
    f = cayley_factors(0.0, 0.3)
    assert (f.s, f.t) == (1.0, 1.0)
    f = cayley_factors(4.0, 1.0)
    assert f.t == pytest.approx(0.5)
    assert f.s == pytest.approx(0.0)


def test_zero_step_is_identity():
    om = omega1_matrix(conn_coeffs(2.0, 1.0))
    np.testing.assert_array_equal(step_matrix(om, 0.0), np.eye(4))


def test_step_is_cayley_transform():
    om = omega2_matrix(conn_coeffs(1.3, -0.7))
    h = 0.2
    cayley = np.linalg.solve(np.eye(4) - 0.5 * h * om, np.eye(4) + 0.5 * h * om)
    np.testing.assert_allclose(step_matrix(om, h), cayley, atol=1e-14)


def test_steps_stay_orthogonal(rng):
    for _ in range(50):
        x = float(rng.uniform(0.2, 20.0))
        y = float(rng.uniform(-10.0, 10.0))
        h = float(rng.uniform(-1.0, 1.0))
        F = step_y(step_x(np.eye(4), (x, y), h), (x, y), h)
        assert orthogonality_defect(F) <= 1e-14


def test_step_rejects_non_positive_base():
    with pytest.raises(DomainError):
        step_x(np.eye(4), (0.0, 1.0), 0.1)
    with pytest.raises(DomainError):
        step_u(np.eye(4), (-1.0, 1.0), 0.1)


def test_u_step_is_a_scaled_x_step():
    F = np.eye(4)
    x, y, du = 0.4, 1.2, 0.05
    np.testing.assert_allclose(step_u(F, (x, y), du), step_x(F, (x, y), -x * du), atol=1e-15)


def test_left_equivariance(random_orthogonal, rect_e):
    Q = random_orthogonal()
    F0 = random_orthogonal()
    path = LatticePath.staircase(rect_e.n)
    a = Q @ propagate(path, rect_e, F0)
    b = propagate(path, rect_e, Q @ F0)
    assert float(np.max(np.abs(a - b))) <= 1e-13


def test_path_out_of_grid():
    grid = GridSpec(x0=2.0, y0=1.0, a=1.0, n=4)
    with pytest.raises(PathOutOfGridError):
        propagate(LatticePath.underline(5, 0), grid, np.eye(4))
    with pytest.raises(PathOutOfGridError):
        canonical_frames(grid, (3.5, 1.5), np.eye(4))


def test_lattice_path_endpoints():
    assert LatticePath.underline(3, 2).endpoint() == (3, 2)
    assert LatticePath.overline(3, 2).endpoint() == (3, 2)
    assert LatticePath.staircase(4).endpoint() == (4, 4)


def test_local_order_is_three():
    deltas = np.logspace(-1, -3, 5)
    defects = [plaquette_defect((2.0, 1.0), float(d)) for d in deltas]
    assert fit_order(deltas, defects) == pytest.approx(3.0, abs=0.15)


def test_constant_field_matches_exponential():
    field = constant_field(a1=0.7, b1=-0.4, c1=1.1)
    om = omega1_matrix(field(0.0, 0.0))
    exact = expm(om)
    errs = []
    ns = (16, 32, 64)
    for n in ns:
        F = np.eye(4)
        for k in range(n):
            F = step_x(F, (1.0 + k / n, 0.0), 1.0 / n, field)
        errs.append(float(np.linalg.norm(F - exact)))
    assert fit_order([1.0 / n for n in ns], errs) == pytest.approx(2.0, abs=0.1)


def test_reference_frame_matches_exponential():
    field = constant_field(a2=0.5, b2=0.3, c2=-0.8)
    om = omega2_matrix(field(0.0, 0.0))
    F = reference_frame(("y", 1.0, 0.0, 1.5), np.eye(4), coeffs=field)
    np.testing.assert_allclose(F, expm(1.5 * om), atol=1e-10)
    with pytest.raises(ValueError):
        reference_frame(("z", 1.0, 0.0, 1.0), np.eye(4))


def test_sweep_is_deterministic_across_workers():
    grid = GridSpec(x0=2.0, y0=1.0, a=1.0, n=16)
    one = sweep_grid(grid, np.eye(4), workers=1)
    four = sweep_grid(grid, np.eye(4), workers=4)
    np.testing.assert_array_equal(one, four)
    corner = propagate(LatticePath.overline(16, 16), grid, np.eye(4))
    np.testing.assert_allclose(one[16, 16], corner, atol=1e-14)
    assert max(orthogonality_defect(F) for F in one.reshape(-1, 4, 4)) <= 1e-13


def test_frame_norm_is_preserved(rect_e):
    F = propagate(LatticePath.staircase(rect_e.n), rect_e, np.eye(4))
    assert np.linalg.norm(F) == pytest.approx(2.0, abs=1e-13)


def test_orthogonality_stress():
    assert orthogonality_stress(steps=100_000) <= 1e-12


def test_constant_k():
    grid = GridSpec(x0=2.0, y0=1.0, a=1.0, n=8)
    K = estimate_K(grid, 5)
    assert K.K >= 1.0
    assert K.K == pytest.approx(max(K.K1, K.K2) + 1.0)
    assert global_bound(0.1, 1.0, 1.0) == pytest.approx(0.1 * (math.exp(2.0) - 1.0))
    with pytest.raises(ValueError):
        estimate_K(grid, 1)


def test_fit_order():
    assert fit_order([1.0, 0.5, 0.25], [1.0, 0.25, 0.0625]) == pytest.approx(2.0)
    with pytest.raises(InsufficientResolutionError):
        fit_order([1.0, 0.5], [0.0, 0.0])


@pytest.mark.slow
def test_global_convergence(rect_e):
    study = convergence_study(rect_e, [8, 16, 32, 64, 128])
    assert study.global_order == pytest.approx(1.0, abs=0.2)
    assert study.path_order == pytest.approx(1.0, abs=0.2)
    for row in study.rows:
        if row.n >= 16:
            assert row.global_error <= row.bound
