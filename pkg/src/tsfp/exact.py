"""Exact Gaussian-rational numbers for operator algebra coefficients.

Commutator rewriting only ever produces integer combinations of the input
coefficients, so keeping them as ``Fraction`` pairs avoids any rounding.
Mixing with a float or complex quietly degrades to ``complex``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


class GaussianRational:
    """a + b i with a, b rational."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # arithmetic -------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Rational)):
            return GaussianRational(other, 0)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) * other
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return complex(self) ** k
        out = GaussianRational(1)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    # comparisons / conversion ------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def coerce(x):
    """Exact where possible, complex otherwise.

    A finite float is itself a dyadic rational, so it is taken at its exact
    binary value. Only non-finite input falls back to ``complex``.
    """
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Rational)):
        return GaussianRational(x)
    z = complex(x)
    try:
        return GaussianRational(Fraction(z.real), Fraction(z.imag))
    except (ValueError, OverflowError):
        return z


def is_exact(x) -> bool:
    return isinstance(x, GaussianRational)


def is_zero(x) -> bool:
    return not bool(x)


def conj(x):
    return x.conjugate()


def format_part(v) -> str:
    if isinstance(v, Fraction):
        short = repr(float(v))
        try:
            if Fraction(short) == v:
                return short
        except ValueError:
            pass
        return str(v)
    return repr(float(v))


def format_coeff(c) -> str:
    if isinstance(c, GaussianRational):
        return f"{format_part(c.re)} {format_part(c.im)}"
    c = complex(c)
    return f"{c.real!r} {c.imag!r}"


def parse_coeff(re_tok: str, im_tok: str):
    """Decimal or p/q tokens parse exactly."""
    try:
        return GaussianRational(Fraction(re_tok), Fraction(im_tok))
    except (ValueError, ZeroDivisionError):
        return complex(float(re_tok), float(im_tok))
