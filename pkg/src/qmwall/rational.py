"""Exact rational parsing and canonical formatting.

Floats are never accepted: a float token in user input is an error, because
silent binary rounding would break every exact identity downstream.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Union

RationalLike = Union[int, Fraction, str]

_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*([+-]?\d+)\s*)?$")


def q(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction, rejecting floats and decimal strings."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        m = _RAT_RE.match(value)
        if not m:
            raise ValueError(f"not an exact rational: {value!r} (use p or p/q)")
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(num, den)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def qvec(values: Iterable[RationalLike]) -> tuple[Fraction, ...]:
    return tuple(q(v) for v in values)


def fmt(x: Fraction | int) -> str:
    """Canonical text form: ``p`` for integers, else ``p/q`` with q > 0."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def to_json(x: Fraction | int) -> int | str:
    """JSON token for a rational: an int when integral, else a ``"p/q"`` string."""
    x = Fraction(x)
    if x.denominator == 1:
        return x.numerator
    return f"{x.numerator}/{x.denominator}"
