from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bmlab.exact import ExactNumber, ExactPolynomial, poly

S2 = ExactNumber.sqrt2()
fracs = st.fractions(min_value=-50, max_value=50, max_denominator=60)


def test_sqrt2_squares_to_two():
    assert S2 * S2 == 2
    assert (1 + S2) * (S2 - 1) == 1


def test_inverse_and_sign():
    x = ExactNumber(3, -2)  # 3 - 2 sqrt2 > 0
    assert x.sign() == 1
    assert x * x.inverse() == 1
    assert ExactNumber(Fraction(141, 100), 0) < S2 < ExactNumber(Fraction(142, 100), 0)


@given(fracs, fracs, fracs, fracs)
def test_field_laws(a, b, c, d):
    x, y = ExactNumber(a, b), ExactNumber(c, d)
    assert x + y == y + x
    assert x * y == y * x
    assert float(x * y) == pytest.approx(float(x) * float(y), rel=1e-9, abs=1e-9)
    if x != 0:
        assert (y / x) * x == y


@given(fracs, fracs)
def test_sign_agrees_with_float(a, b):
    x = ExactNumber(a, b)
    f = float(a) + float(b) * 2 ** 0.5
    if abs(f) > 1e-9:
        assert x.sign() == (1 if f > 0 else -1)


def test_polynomial_arithmetic():
    r = ExactPolynomial.variable()
    p = (r - 1) * (r + 1)
    assert p == r ** 2 - 1
    assert p.degree == 2
    assert p.derivative() == 2 * r
    assert p(Fraction(3)) == 8
    assert poly(1, 0, -1) == p  # high-first helper


@given(st.lists(fracs, min_size=1, max_size=6), st.fractions(min_value=0, max_value=1))
def test_interval_bounds_enclose_values(coeffs, t):
    p = ExactPolynomial([ExactNumber(c, c / 3) for c in coeffs])
    lo, hi = Fraction(0), Fraction(1)
    v = p(t)
    assert p.lower_bound(lo, hi) <= v <= p.upper_bound(lo, hi)
