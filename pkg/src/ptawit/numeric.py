"""Exact rationals and the ordered bound algebra used by DBMs.

Rationals are plain :class:`fractions.Fraction` values. A :class:`Bound` is a
pair ``(value, strictness)`` standing for the constraint ``c_i - c_j < value``
or ``c_i - c_j <= value``.
"""
from __future__ import annotations

import math
import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction

Rational = Fraction

INF = math.inf


class UndefinedSum(ArithmeticError):
    """Raised for (+inf) + (-inf)."""


class Bound:
    """A DBM entry. ``strict`` is True for ``<`` and False for ``<=``.

    Infinite values are always stored as strict.
    """

    __slots__ = ("value", "strict", "_key")

    def __init__(self, value, strict: bool = False):
        if isinstance(value, float):
            if math.isinf(value):
                strict = True
            elif value.is_integer():
                value = int(value)
            else:
                raise ValueError(f"bound values are integers, got {value!r}")
        elif not isinstance(value, int):
            raise TypeError(f"bound values are integers, got {value!r}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "strict", bool(strict))
        object.__setattr__(self, "_key", (value, 0 if strict else 1))

    def __setattr__(self, name, value):
        raise AttributeError("Bound is immutable")

    @classmethod
    def le(cls, value) -> "Bound":
        return cls(value, False)

    @classmethod
    def lt(cls, value) -> "Bound":
        return cls(value, True)

    @property
    def is_infinite(self) -> bool:
        return isinstance(self.value, float)

    def __add__(self, other: "Bound") -> "Bound":
        return bound_add(self, other)

    def __eq__(self, other):
        return isinstance(other, Bound) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __lt__(self, other: "Bound") -> bool:
        return self._key < other._key

    def __le__(self, other: "Bound") -> bool:
        return self._key <= other._key

    def __gt__(self, other: "Bound") -> bool:
        return self._key > other._key

    def __ge__(self, other: "Bound") -> bool:
        return self._key >= other._key

    def __repr__(self):
        return f"Bound({format_bound(self)!r})"

    def __str__(self):
        return format_bound(self)

    def admits(self, diff: Fraction) -> bool:
        """Whether a difference value satisfies this bound."""
        if self.value == INF:
            return True
        if self.value == -INF:
            return False
        return diff < self.value if self.strict else diff <= self.value


ZERO_LE = Bound(0, False)
INF_LT = Bound(INF, True)
NEG_INF_LT = Bound(-INF, True)


def bound_add(a: Bound, b: Bound) -> Bound:
    """``(a, <|<=) + (b, <|<=) = (a + b, min of strictness)``."""
    if a.is_infinite or b.is_infinite:
        if a.is_infinite and b.is_infinite and a.value != b.value:
            raise UndefinedSum(f"{a} + {b}")
        return a if a.is_infinite else b
    return Bound(a.value + b.value, a.strict or b.strict)


def bound_min(a: Bound, b: Bound) -> Bound:
    return a if a._key <= b._key else b


def bound_max(a: Bound, b: Bound) -> Bound:
    return a if a._key >= b._key else b


def format_bound(b: Bound) -> str:
    if b.value == INF:
        return "inf"
    if b.value == -INF:
        return "-inf"
    return ("<" if b.strict else "<=") + str(b.value)


def parse_bound(text: str) -> Bound:
    text = text.strip()
    if text in ("inf", "<inf"):
        return INF_LT
    if text in ("-inf", "<-inf"):
        return NEG_INF_LT
    if text.startswith("<="):
        return Bound(int(text[2:]), False)
    if text.startswith("<"):
        return Bound(int(text[1:]), True)
    raise ValueError(f"not a bound: {text!r}")


_RATIONAL = re.compile(r"^\s*[+-]?\d+\s*(/\s*\d+\s*)?$")


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q``, an integer, or a finite decimal exactly."""
    text = str(text).strip()
    if _RATIONAL.match(text):
        value = Fraction(text.replace(" ", ""))
        return value
    try:
        dec = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"not a rational: {text!r}") from None
    if not dec.is_finite():
        raise ValueError(f"not a rational: {text!r}")
    return Fraction(dec)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def format_decimal(q: Fraction, digits: int = 10) -> str:
    """Exact decimal when the expansion terminates, else rounded with a trailing '...'."""
    q = Fraction(q)
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1:
        s = f"{Decimal(q.numerator) / Decimal(q.denominator):f}"
        return s.rstrip("0").rstrip(".") if "." in s else s
    return f"{float(q):.{digits}g}..."
