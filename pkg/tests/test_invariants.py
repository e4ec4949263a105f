"""Tests for the invariant registry and runner."""
import math

import pytest

from app import invariants
from app.errors import NonConvergenceError
from app.invariants import CHECKS, DEFAULT_BOUNDS, run_invariants
from app.models import CheckOptions


def test_registry():
    assert {"g-integrals", "tau", "flatness", "orthogonality", "spheres", "cusps", "asymptotics", "reflection"} <= set(CHECKS)


def test_scalar_checks_pass():
    report = run_invariants(only=["g-integrals", "tau", "h-bounds"])
    assert report.passed, [e for e in report.entries if not e.passed]
    names = {e.name for e in report.entries}
    assert {"g-x0", "g-x1", "g-alt", "h-y", "ode", "tau-lower-bound", "tau-limit", "h-bounds"} <= names
    assert all(e.bound == DEFAULT_BOUNDS[e.name] for e in report.entries)


def test_local_order_check_passes():
    report = run_invariants(only=["order-local"])
    assert report.passed
    assert report.summary == "1/1"


def test_unknown_check():
    with pytest.raises(ValueError):
        run_invariants(only=["nope"])


def test_tolerance_override_can_fail_a_check():
    opts = CheckOptions(tolerances={"tau-lower-bound": -10.0})
    report = run_invariants(only=["tau"], options=opts)
    assert not report.passed
    failed = [e for e in report.entries if not e.passed]
    assert [e.name for e in failed] == ["tau-lower-bound"]
    assert failed[0].bound == -10.0


def test_raising_check_becomes_a_failed_entry(monkeypatch):
    def broken(opts):
        raise NonConvergenceError("did not settle")

    monkeypatch.setitem(invariants.CHECKS, "broken", broken)
    report = run_invariants(only=["broken", "h-bounds"])
    assert not report.passed
    first = report.entries[0]
    assert first.name == "broken"
    assert math.isnan(first.measured)
    assert "did not settle" in first.detail
    assert all(e.passed for e in report.entries[1:])


def test_value_error_in_a_check_becomes_a_failed_entry(monkeypatch):
    def bad_fit(opts):
        raise ValueError("log of a non-positive error")

    monkeypatch.setitem(invariants.CHECKS, "bad-fit", bad_fit)
    report = run_invariants(only=["bad-fit", "h-bounds"])
    assert not report.passed
    assert report.entries[0].name == "bad-fit"
    assert math.isnan(report.entries[0].measured)
    assert "non-positive" in report.entries[0].detail
    assert all(e.passed for e in report.entries[1:])


def test_orthogonality_check_with_short_stress():
    report = run_invariants(only=["orthogonality"], options=CheckOptions(stress_steps=10_000))
    assert report.passed


@pytest.mark.slow
def test_full_suite():
    report = run_invariants(options=CheckOptions(stress_steps=100_000))
    assert report.passed, [(e.name, e.measured, e.bound) for e in report.entries if not e.passed]
