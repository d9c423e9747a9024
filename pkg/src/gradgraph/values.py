"""Scalar constant domain: IEEE doubles or exact rationals, never mixed.

A graph fixes its domain at creation. Rationals are plain
:class:`fractions.Fraction` values, which the standard library keeps in
lowest terms with a positive denominator.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import ExactModeUnsupported, LogDomainError, ZeroToNegativePower

Value = float | Fraction

FLOAT = "float"
RATIONAL = "rational"
DOMAINS = (FLOAT, RATIONAL)


def coerce(domain: str, v) -> Value:
    """Convert ``v`` into the given domain, rejecting lossy conversions."""
    if domain == FLOAT:
        if isinstance(v, (int, float, Fraction)):
            return float(v)
        raise TypeError(f"cannot use {type(v).__name__} as a float value")
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    raise TypeError(
        f"cannot use {type(v).__name__} in an exact graph; pass int or Fraction"
    )


def zero(domain: str) -> Value:
    return 0.0 if domain == FLOAT else Fraction(0)


def one(domain: str) -> Value:
    return 1.0 if domain == FLOAT else Fraction(1)


def is_zero(v: Value) -> bool:
    return v == 0


def is_one(v: Value) -> bool:
    return v == 1


def powi(base: Value, k: int) -> Value:
    """Integer power by squaring; negative k is the reciprocal of the
    positive power. Mirrors the tape kernels bit for bit in float mode."""
    if k < 0:
        if is_zero(base):
            raise ZeroToNegativePower(f"{base!r} raised to {k}")
        inv = powi(base, -k)
        return 1 / inv if isinstance(base, Fraction) else 1.0 / inv
    r: Value = Fraction(1) if isinstance(base, Fraction) else 1.0
    b = base
    e = k
    while e:
        if e & 1:
            r = r * b
        b = b * b
        e >>= 1
    return r


def log_value(v: Value) -> Value:
    """Logarithm of a constant. Exact graphs only admit log(1) = 0."""
    if isinstance(v, Fraction):
        if v <= 0:
            raise LogDomainError(f"log of non-positive value {v}")
        if v == 1:
            return Fraction(0)
        raise ExactModeUnsupported(f"log({v}) has no exact rational value")
    if v <= 0.0:
        raise LogDomainError(f"log of non-positive value {v!r}")
    return math.log(v)


def exp_value(v: Value) -> Value:
    """Exponential of a constant. Exact graphs only admit exp(0) = 1.
    Float overflow yields inf rather than an error."""
    if isinstance(v, Fraction):
        if v == 0:
            return Fraction(1)
        raise ExactModeUnsupported(f"exp({v}) has no exact rational value")
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def format_value(v: Value) -> str:
    """Shortest round-trip text: repr for floats, num/den for rationals."""
    return str(v) if isinstance(v, Fraction) else repr(v)


def to_jsonable(v: Value):
    return str(v) if isinstance(v, Fraction) else v
