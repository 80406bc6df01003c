from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings, strategies as st

from projthermo.jets import DerivCarrier, Jet, jet_exp, jet_mul, jet_recip_pow, linear_recip_pow

ctx = gmpy2.context(precision=200)


def close(a, b, tol=mpfr("1e-50")):
    return abs(a - b) <= tol * max(1, abs(b))


def test_linear_recip_pow_unit_square():
    with ctx:
        j = linear_recip_pow(mpfr(1), 2, 3)
        assert [int(c) for c in j.coeffs] == [1, -2, 3, -4]


def test_linear_recip_pow_matches_recurrence():
    with ctx:
        c0 = mpfr(-3) / 7
        for m in range(1, 6):
            a = linear_recip_pow(c0, m, 6)
            b = jet_recip_pow(Jet.linear(c0, 6), m)
            assert all(close(x, y) for x, y in zip(a.coeffs, b.coeffs))


def test_zero_constant_term_raises():
    with ctx:
        with pytest.raises(ZeroDivisionError):
            linear_recip_pow(mpfr(0), 1, 2)
        with pytest.raises(ZeroDivisionError):
            jet_recip_pow(Jet([mpfr(0), mpfr(1)]), 1)


def test_jet_exp_of_linear():
    with ctx:
        e = jet_exp(Jet([mpfr(0), mpfr(1), mpfr(0), mpfr(0)]))
        assert all(close(c, mpfr(1) / f) for c, f in zip(e.coeffs, (1, 1, 2, 6)))


def test_order_mismatch():
    with pytest.raises(ValueError):
        jet_mul(Jet([1, 2]), Jet([1, 2, 3]))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.fractions(-5, 5, max_denominator=9), min_size=2, max_size=7).filter(
        lambda cs: cs[0] != 0
    ),
    st.integers(1, 6),
)
def test_recip_pow_times_power_is_one(cs, m):
    with ctx:
        x = Jet([mpfr(gmpy2.mpq(c.numerator, c.denominator)) for c in cs])
        y = jet_recip_pow(x, m)
        prod = y
        for _ in range(m):
            prod = jet_mul(prod, x)
        scale = max(abs(c) for c in prod.coeffs[:1]) + sum(abs(c) for c in y.coeffs)
        assert close(prod[0], mpfr(1))
        for c in prod.coeffs[1:]:
            assert abs(c) <= mpfr("1e-50") * scale * max(1, *(abs(v) for v in x.coeffs)) ** m


def test_carrier_tag_mismatch():
    with ctx:
        with pytest.raises(ValueError):
            DerivCarrier(1, 1, 0, "B") + DerivCarrier(1, 1, 0, "beta")


def _fd(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h), (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)


@pytest.mark.parametrize(
    "fn",
    [
        lambda v: (v * v + 3).reciprocal() * v.exp(),
        lambda v: (2 * v - 1) ** 5 / (v + 4),
        lambda v: (v * v + 1).log() - v ** -3,
        lambda v: 1 / (v - 7) - (3 - v) * v,
    ],
)
def test_carrier_derivatives_match_finite_differences(fn):
    with gmpy2.context(precision=300):
        x0 = mpfr(13) / 10
        c = fn(DerivCarrier.variable(x0, "B"))

        def scalar(v):
            return fn(DerivCarrier(v, 0, 0, "B")).value

        d1, d2 = _fd(scalar, x0, mpfr("1e-20"))
        assert close(c.d1, d1, mpfr("1e-35"))
        assert close(c.d2, d2, mpfr("1e-35"))


def test_carrier_integer_power_only():
    with ctx:
        with pytest.raises(TypeError):
            DerivCarrier(2, 1) ** Fraction(1, 2)
