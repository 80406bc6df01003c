"""Closed-form limits: low temperature and strong coupling.

All quantities are in reduced units (mu = B = k_B = 1): temperatures are
t = k_B T / muB, couplings j = J / muB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import gmpy2
from gmpy2 import mpfr

from .spectra import _frac, to_mpfr

REGIMES = ("low_T_noninteracting", "weak_coupling", "strong_coupling", "none")


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    condition_value: float
    applicable: bool


@dataclass(frozen=True)
class StrongCouplingZ:
    """Strong-coupling Z with the unknown prefactor a_N(J) set to 1.

    ``log_value`` is ln of the same quantity; use it when ``value`` would
    overflow or underflow.
    """

    value: object
    log_value: object


def m_low_T(N: int, t: float) -> float:
    """M/mu ~ N/2 - (2^N - 1) t for free spins as t -> 0."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return 0.5 * N - (2**N - 1) * t


def low_T_prefactor(N: int) -> Fraction:
    """a_N = prod_{k=1..N} k^(-C(N,k)), the beta-independent factor of z_low_T."""
    out = Fraction(1)
    for k in range(1, N + 1):
        out /= Fraction(k) ** comb(N, k)
    return out


def z_low_T(N: int, beta_mu_b, bits: int = 256):
    """Ground-state residue alone: a_N (beta muB)^(1-2^N) exp(N beta muB / 2)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    a = low_T_prefactor(N)
    with gmpy2.context(precision=bits):
        x = to_mpfr(beta_mu_b)
        return to_mpfr(a) * x ** (1 - 2**N) * gmpy2.exp(N * x / 2)


def weak_coupling_applicable(N: int, j) -> RegimeReport:
    """Ground-state residue dominates Z as t -> 0 when j <= 2/N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    j = _frac(j)
    if j < 0:
        raise ValueError("j must be non-negative")
    value = j * N / 2
    return RegimeReport("weak_coupling", float(value), value <= 1)


def z_strong_coupling(N: int, beta, j, mu_b=1, bits: int = 256) -> StrongCouplingZ:
    """exp(beta J N(N-1)/8) beta^(1-2^N) (muB)^(-N) sinh^N(beta muB / 2), a_N(J) = 1."""
    if N < 2 or N % 2:
        raise ValueError("the strong-coupling form needs an even N >= 2")
    with gmpy2.context(precision=bits):
        b = to_mpfr(beta)
        mb = to_mpfr(mu_b)
        J = to_mpfr(_frac(j)) * mb
        half = b * mb / 2
        log_value = (
            b * J * N * (N - 1) / 8
            + (1 - 2**N) * gmpy2.log(b)
            - N * gmpy2.log(mb)
            + N * gmpy2.log(gmpy2.sinh(half))
        )
        return StrongCouplingZ(gmpy2.exp(log_value), log_value)


def m_strong_coupling(N: int, t: float) -> float:
    """M/mu = N (coth(1/(2t))/2 - t): beta^-1 d/dB of the strong-coupling ln Z."""
    x = 1.0 / t
    return N * (0.5 / math.tanh(0.5 * x) - t)


def chi_strong_coupling(t) -> float:
    """chi/(mu/B) = [1 - ((x/2)/sinh(x/2))^2] t with x = 1/t; independent of N."""
    if not t > 0:
        raise ValueError("t must be positive")
    with gmpy2.context(precision=113):
        tt = mpfr(t)
        h = 1 / (2 * tt)
        if h > 400:
            return float(tt)
        ratio = h / gmpy2.sinh(h)
        return float((1 - ratio * ratio) * tt)
