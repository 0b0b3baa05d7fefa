from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qmwall.rational import fmt, q, qvec, to_json


def test_parse_forms():
    assert q(3) == 3
    assert q("3") == 3
    assert q("-6/4") == Fraction(-3, 2)
    assert q(" 5/10 ") == Fraction(1, 2)
    assert q(Fraction(2, 3)) == Fraction(2, 3)


@pytest.mark.parametrize("bad", [0.5, True, "1.5", "1/0", "a/b", "", "1e3"])
def test_rejects_floats_and_garbage(bad):
    with pytest.raises((ValueError, TypeError)):
        q(bad)


def test_qvec():
    assert qvec([1, "1/2"]) == (Fraction(1), Fraction(1, 2))


@given(st.fractions())
def test_fmt_roundtrip(x):
    assert q(fmt(x)) == x
    s = fmt(x)
    if "/" in s:
        num, den = s.split("/")
        assert int(den) > 1
        assert Fraction(int(num), int(den)).denominator == int(den)


def test_to_json():
    assert to_json(Fraction(4, 2)) == 2
    assert to_json(Fraction(-1, 3)) == "-1/3"
    assert isinstance(to_json(Fraction(7)), int)
