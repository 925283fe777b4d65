from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Union

Scalar = Union[Fraction, float]


def parse_scalar(value, exact: bool = True) -> Scalar:
    """Parse ``"p/q"``, ints, or floats; floats stay floats unless exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value)) if exact else value
    if isinstance(value, str):
        text = value.strip()
        if not exact:
            return float(Fraction(text))
        return Fraction(text)
    raise TypeError(f"cannot parse {value!r} as a number")


def format_scalar(value: Scalar) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def beta_int(a: int, b: int) -> Fraction:
    """B(a, b) for positive integers, as an exact rational."""
    if a < 1 or b < 1:
        raise ValueError("Beta function needs positive integer arguments")
    return Fraction(factorial(a - 1) * factorial(b - 1), factorial(a + b - 1))


def multinomial(parts) -> int:
    out = factorial(sum(parts))
    for part in parts:
        out //= factorial(part)
    return out


__all__ = ["Scalar", "parse_scalar", "format_scalar", "is_exact", "beta_int", "multinomial", "comb"]
