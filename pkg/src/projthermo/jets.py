"""Truncated power series and second-order forward derivatives.

A :class:`Jet` holds ``c0 + c1*eps + ... + cK*eps**K``.  Coefficients may be
gmpy2 ``mpfr`` values or :class:`DerivCarrier` instances, so derivative
information flows through the same series arithmetic.  Precision is whatever
gmpy2 context is active when an operation runs.
"""

from __future__ import annotations

from typing import Sequence

import gmpy2
from gmpy2 import mpfr

__all__ = [
    "DerivCarrier",
    "Jet",
    "jet_exp",
    "jet_mul",
    "jet_recip_pow",
    "linear_recip_pow",
    "magnitude",
]


class DerivCarrier:
    """Value with first and second derivatives in one tagged variable."""

    __slots__ = ("value", "d1", "d2", "tag")

    def __init__(self, value, d1=0, d2=0, tag="B"):
        self.value = mpfr(value)
        self.d1 = mpfr(d1)
        self.d2 = mpfr(d2)
        self.tag = tag

    @classmethod
    def variable(cls, value, tag):
        """The independent variable itself: derivative 1, curvature 0."""
        return cls(value, 1, 0, tag)

    def _coerce(self, other):
        if isinstance(other, DerivCarrier):
            if other.tag != self.tag:
                raise ValueError(
                    f"cannot mix derivatives in {self.tag!r} and {other.tag!r}"
                )
            return other
        return None

    def _new(self, v, d1, d2):
        out = DerivCarrier.__new__(DerivCarrier)
        out.value, out.d1, out.d2, out.tag = v, d1, d2, self.tag
        return out

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return self._new(self.value + other, self.d1, self.d2)
        return self._new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.value, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return self._new(self.value * other, self.d1 * other, self.d2 * other)
        v, a1, a2 = self.value, self.d1, self.d2
        w, b1, b2 = o.value, o.d1, o.d2
        return self._new(v * w, a1 * w + v * b1, a2 * w + 2 * a1 * b1 + v * b2)

    __rmul__ = __mul__

    def reciprocal(self):
        r = 1 / self.value
        r2 = r * r
        d1 = -self.d1 * r2
        d2 = (2 * self.d1 * self.d1 * r - self.d2) * r2
        return self._new(r, d1, d2)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return self._new(self.value / other, self.d1 / other, self.d2 / other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return self.reciprocal() ** (-k)
        v = self.value
        if k == 0:
            return self._new(mpfr(1), mpfr(0), mpfr(0))
        vk1 = v ** (k - 1)
        d1 = k * vk1 * self.d1
        d2 = k * vk1 * self.d2
        if k > 1:
            d2 += k * (k - 1) * v ** (k - 2) * self.d1 * self.d1
        return self._new(vk1 * v, d1, d2)

    def exp(self):
        e = gmpy2.exp(self.value)
        return self._new(e, e * self.d1, e * (self.d2 + self.d1 * self.d1))

    def log(self):
        r = 1 / self.value
        d1 = self.d1 * r
        return self._new(gmpy2.log(self.value), d1, self.d2 * r - d1 * d1)

    def components(self):
        return (self.value, self.d1, self.d2)

    def __repr__(self):
        return f"DerivCarrier({self.value}, d1={self.d1}, d2={self.d2}, tag={self.tag!r})"


def magnitude(x):
    """Absolute value of a scalar, or of a carrier's value component."""
    if isinstance(x, DerivCarrier):
        return abs(x.value)
    return abs(x)


def _exp(x):
    if isinstance(x, DerivCarrier):
        out = x.exp()
        val = out.value
    else:
        out = val = gmpy2.exp(x)
    if gmpy2.is_infinite(val):
        raise OverflowError("exp overflowed the mpfr exponent range")
    return out


class Jet:
    """Truncated Taylor series of fixed order."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        if not coeffs:
            raise ValueError("a jet needs at least one coefficient")
        self.coeffs = list(coeffs)

    @classmethod
    def constant(cls, c, order: int) -> "Jet":
        return cls([c] + [mpfr(0)] * order)

    @classmethod
    def linear(cls, c0, order: int) -> "Jet":
        """``c0 + eps`` truncated at ``order``."""
        coeffs = [c0] + [mpfr(0)] * order
        if order >= 1:
            coeffs[1] = mpfr(1)
        return cls(coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __add__(self, other):
        if isinstance(other, Jet):
            _check_order(self, other)
            return Jet([a + b for a, b in zip(self.coeffs, other.coeffs)])
        return Jet([self.coeffs[0] + other] + self.coeffs[1:])

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def __repr__(self):
        return f"Jet({self.coeffs!r})"


def _check_order(x: Jet, y: Jet):
    if len(x.coeffs) != len(y.coeffs):
        raise ValueError(f"jet orders differ: {x.order} vs {y.order}")


def jet_mul(x: Jet, y: Jet) -> Jet:
    """Cauchy product truncated at the common order."""
    _check_order(x, y)
    a, b = x.coeffs, y.coeffs
    out = []
    for k in range(len(a)):
        s = a[0] * b[k]
        for i in range(1, k + 1):
            s = s + a[i] * b[k - i]
        out.append(s)
    return Jet(out)


def jet_exp(x: Jet) -> Jet:
    """exp of a series: y0 = exp(c0), k*yk = sum_{i=1..k} i*ci*y(k-i)."""
    c = x.coeffs
    y = [_exp(c[0])]
    for k in range(1, len(c)):
        s = c[1] * y[k - 1]
        for i in range(2, k + 1):
            s = s + i * c[i] * y[k - i]
        y.append(s / k)
    return Jet(y)


def jet_recip_pow(x: Jet, m: int) -> Jet:
    """``x**(-m)`` by the power-series recurrence for ``y = x**alpha``.

    k*c0*yk = sum_{i=1..k} ((alpha+1)*i - k) * ci * y(k-i).
    Raises ZeroDivisionError when the constant term vanishes.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    c = x.coeffs
    if magnitude(c[0]) == 0:
        raise ZeroDivisionError("constant term is zero: the pole was not isolated")
    r = 1 / c[0]
    y = [r**m]
    alpha = -m
    for k in range(1, len(c)):
        s = None
        for i in range(1, k + 1):
            ci = c[i]
            if not isinstance(ci, DerivCarrier) and ci == 0:
                continue
            term = ((alpha + 1) * i - k) * ci * y[k - i]
            s = term if s is None else s + term
        y.append(mpfr(0) if s is None else s * r / k)
    return Jet(y)


def linear_recip_pow(c0, m: int, order: int) -> Jet:
    """``(c0 + eps)**(-m)``: coefficients C(-m, k) * c0**(-m-k)."""
    if magnitude(c0) == 0:
        raise ZeroDivisionError("constant term is zero: the pole was not isolated")
    r = 1 / c0
    y = [r**m]
    for k in range(1, order + 1):
        y.append(y[-1] * r * (-(m + k - 1)) / k)
    return Jet(y)
