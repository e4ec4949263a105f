# tests/conftest.py
from __future__ import annotations

import numpy as np
import pytest

from app.models import GridSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240531)


@pytest.fixture
def random_orthogonal(rng):
    """Factory for Haar-distributed 4x4 orthogonal matrices."""

    def make() -> np.ndarray:
        q, r = np.linalg.qr(rng.standard_normal((4, 4)))
        return q * np.sign(np.diag(r))

    return make


@pytest.fixture
def rect_e() -> GridSpec:
    """E = [2, 3] x [1, 2]."""
    return GridSpec(x0=2.0, y0=1.0, a=1.0, n=64)
