# app/ddarith.py
"""
Error-free transformations, a running compensated sum and a small
double-double number type.

Used by the X0 series when plain double summation loses too many digits
to cancellation.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Tuple, Union

_SPLITTER = 134217729.0  # 2^27 + 1


def split(a: float) -> Tuple[float, float]:
    """Dekker split into two halves of at most 27 significant bits."""
    c = _SPLITTER * a
    abig = c - a
    ahi = c - abig
    return ahi, a - ahi


def two_sum(a: float, b: float) -> Tuple[float, float]:
    """(s, err) with s + err == a + b exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a: float, b: float) -> Tuple[float, float]:
    """Requires |a| >= |b|."""
    s = a + b
    return s, b - (s - a)


def two_prod(a: float, b: float) -> Tuple[float, float]:
    """(p, err) with p + err == a * b exactly."""
    p = a * b
    if hasattr(math, "fma"):
        return p, math.fma(a, b, -p)
    ahi, alo = split(a)
    bhi, blo = split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class Accumulator:
    """Running sum kept as an unevaluated pair (s, t)."""

    __slots__ = ("_s", "_t", "_abs")

    def __init__(self, y: float = 0.0) -> None:
        self._s = float(y)
        self._t = 0.0
        self._abs = abs(float(y))  # sum of |terms|, for rounding estimates

    def add(self, y: float) -> None:
        self._abs += abs(y)
        y, u = two_sum(y, self._t)
        self._s, self._t = two_sum(y, self._s)
        if self._s == 0.0:
            self._s = u
        else:
            self._t += u

    @property
    def value(self) -> float:
        return self._s + self._t

    @property
    def mass(self) -> float:
        """Sum of |terms| added so far."""
        return self._abs


Number = Union["DD", float, int]


class DD(tuple):
    """Double-double number (hi, lo) with |lo| <= ulp(hi) / 2."""

    __slots__ = ()

    def __new__(cls, hi: float, lo: float = 0.0) -> "DD":
        return super().__new__(cls, (float(hi), float(lo)))

    @classmethod
    def from_fraction(cls, f: Fraction) -> "DD":
        hi = float(f)
        lo = float(f - Fraction(hi))
        return cls(hi, lo)

    @staticmethod
    def _coerce(other: Number) -> "DD":
        return other if isinstance(other, DD) else DD(float(other), 0.0)

    def __add__(self, other: Number) -> "DD":
        o = DD._coerce(other)
        s, e = two_sum(self[0], o[0])
        t, f = two_sum(self[1], o[1])
        e += t
        s, e = quick_two_sum(s, e)
        e += f
        return DD(*quick_two_sum(s, e))

    __radd__ = __add__

    def __neg__(self) -> "DD":
        return DD(-self[0], -self[1])

    def __sub__(self, other: Number) -> "DD":
        return self + (-DD._coerce(other))

    def __rsub__(self, other: Number) -> "DD":
        return DD._coerce(other) - self

    def __mul__(self, other: Number) -> "DD":
        o = DD._coerce(other)
        p, e = two_prod(self[0], o[0])
        e += self[0] * o[1] + self[1] * o[0]
        return DD(*quick_two_sum(p, e))

    __rmul__ = __mul__

    def __abs__(self) -> "DD":
        return -self if self[0] < 0 or (self[0] == 0 and self[1] < 0) else self

    def __float__(self) -> float:
        return self[0] + self[1]

    def __repr__(self) -> str:
        return f"DD(hi={self[0]:.17g}, lo={self[1]:.17g})"
