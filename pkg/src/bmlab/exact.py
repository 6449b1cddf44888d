"""Exact arithmetic in Q[sqrt 2] and univariate polynomials over it."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
import math


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are accepted only through their exact binary value
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


class ExactNumber:
    """The number ``a + b*sqrt(2)`` with rational ``a`` and ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def sqrt2(cls) -> "ExactNumber":
        return cls(0, 1)

    @staticmethod
    def coerce(x) -> "ExactNumber":
        if isinstance(x, ExactNumber):
            return x
        return ExactNumber(x, 0)

    def __add__(self, other):
        if isinstance(other, ExactPolynomial):
            return NotImplemented
        o = ExactNumber.coerce(other)
        return ExactNumber(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return ExactNumber(-self.a, -self.b)

    def __sub__(self, other):
        if isinstance(other, ExactPolynomial):
            return NotImplemented
        return self + (-ExactNumber.coerce(other))

    def __rsub__(self, other):
        return ExactNumber.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ExactPolynomial):
            return NotImplemented
        o = ExactNumber.coerce(other)
        return ExactNumber(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate(self) -> "ExactNumber":
        return ExactNumber(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm a^2 - 2 b^2; zero only for zero."""
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> "ExactNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt 2]")
        return ExactNumber(self.a / n, -self.b / n)

    def __truediv__(self, other):
        return self * ExactNumber.coerce(other).inverse()

    def __rtruediv__(self, other):
        return ExactNumber.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer exponents only")
        if k < 0:
            return self.inverse() ** (-k)
        result = ExactNumber(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def sign(self) -> int:
        """Exact sign, decided from the signs of a, b and of a^2 - 2 b^2."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0:
            return sb
        if sa == sb:
            return sa
        # opposite signs: |a| vs |b| sqrt 2
        n = self.norm()
        if n == 0:
            return 0
        return sa if n > 0 else sb

    def __eq__(self, other):
        try:
            o = ExactNumber.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def is_rational(self) -> bool:
        return self.b == 0

    def __repr__(self):
        if self.b == 0:
            return f"ExactNumber({self.a})"
        return f"ExactNumber({self.a} + {self.b}*sqrt2)"


class ExactPolynomial:
    """Dense polynomial with ExactNumber coefficients, lowest degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [ExactNumber.coerce(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def variable(cls) -> "ExactPolynomial":
        return cls([0, 1])

    @classmethod
    def constant(cls, c) -> "ExactPolynomial":
        return cls([c])

    @staticmethod
    def coerce(x) -> "ExactPolynomial":
        if isinstance(x, ExactPolynomial):
            return x
        return ExactPolynomial([x])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        o = ExactPolynomial.coerce(other)
        n = max(len(self.coeffs), len(o.coeffs))
        zero = ExactNumber(0)
        return ExactPolynomial(
            [(self.coeffs[i] if i < len(self.coeffs) else zero)
             + (o.coeffs[i] if i < len(o.coeffs) else zero) for i in range(n)]
        )

    __radd__ = __add__

    def __neg__(self):
        return ExactPolynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-ExactPolynomial.coerce(other))

    def __rsub__(self, other):
        return ExactPolynomial.coerce(other) - self

    def __mul__(self, other):
        o = ExactPolynomial.coerce(other)
        if not self.coeffs or not o.coeffs:
            return ExactPolynomial()
        out = [ExactNumber(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return ExactPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = ExactPolynomial([1])
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        try:
            o = ExactPolynomial.coerce(other)
        except TypeError:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, x):
        """Horner evaluation; exact for ExactNumber/Fraction/int, float otherwise."""
        if isinstance(x, float):
            acc = 0.0
            for c in reversed(self.coeffs):
                acc = acc * x + float(c)
            return acc
        x = ExactNumber.coerce(x)
        acc = ExactNumber(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "ExactPolynomial":
        return ExactPolynomial([c * i for i, c in enumerate(self.coeffs)][1:])

    def lower_bound(self, lo, hi) -> ExactNumber:
        """Lower bound of p on [lo, hi] with 0 <= lo, by pairing each
        positive coefficient with lo**k and each negative one with hi**k."""
        lo = ExactNumber.coerce(lo)
        hi = ExactNumber.coerce(hi)
        if lo.sign() < 0:
            raise ValueError("coefficient bound needs a nonnegative interval")
        acc = ExactNumber(0)
        for k, c in enumerate(self.coeffs):
            s = c.sign()
            if s > 0:
                acc = acc + c * lo ** k
            elif s < 0:
                acc = acc + c * hi ** k
        return acc

    def upper_bound(self, lo, hi) -> ExactNumber:
        return -((-self).lower_bound(lo, hi))

    def __repr__(self):
        return f"ExactPolynomial({list(self.coeffs)!r})"


def poly(*coeffs) -> ExactPolynomial:
    """Polynomial from coefficients given highest degree first."""
    return ExactPolynomial(list(reversed(coeffs)))
