"""Partition function as a sum of residues.

Z(beta) is the sum over poles lambda_j = -beta*E_j of the residues of

    exp(lambda) * prod_k (lambda + beta*E_k) ** (-m_k)

with the normalisation Z -> 1/(dim-1)! as beta -> 0.  Each residue is the
coefficient of eps**(m_j - 1) in a local jet around the pole.  The residues
alternate in sign, so the sum is checked for cancellation and recomputed at
higher precision when needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .jets import DerivCarrier, Jet, jet_mul, linear_recip_pow, magnitude
from .spectra import ClusteredSpectrum, ModelParams, Spectrum, cluster, to_mpfr

log = logging.getLogger(__name__)

MIN_BITS = 53


class CancellationError(ArithmeticError):
    """The residue sum lost too many bits even at the largest allowed precision."""

    def __init__(self, message, bits, lost_bits):
        super().__init__(message)
        self.bits = bits
        self.lost_bits = lost_bits


@dataclass(frozen=True)
class PrecisionPolicy:
    base_bits: int = 256
    max_bits: int = 4096
    cancellation_guard: int = 32

    def __post_init__(self):
        if self.base_bits < MIN_BITS:
            raise ValueError(f"base_bits must be at least {MIN_BITS}")
        if self.base_bits > self.max_bits:
            raise ValueError("base_bits must not exceed max_bits")
        if not 0 <= self.cancellation_guard < self.base_bits:
            raise ValueError("cancellation_guard must lie in [0, base_bits)")

    def schedule(self):
        bits = self.base_bits
        while True:
            yield bits
            if bits >= self.max_bits:
                return
            bits = min(2 * bits, self.max_bits)


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True)
class ResidueSum:
    """Result of one fixed-precision residue evaluation.

    ``lost_bits`` is log2(max_j A_j / |sum|), where A_j >= |residue_j| is the
    residue recomputed with every jet coefficient replaced by its magnitude,
    so cancellation inside a high-order residue is counted as well as
    cancellation between residues.  Derivative components are measured
    against the natural scale of that derivative order.
    """

    value: object
    terms: tuple
    bits: int
    lost_bits: float
    guard: int

    @property
    def reliable(self) -> bool:
        return self.lost_bits <= self.bits - self.guard


def _log2(x) -> float:
    if x == 0:
        return -math.inf
    return float(gmpy2.log2(abs(x)))


def _scaled_energies(cs: ClusteredSpectrum, beta, variable):
    """beta*E for every pole member, as mpfr or DerivCarrier.

    Field derivatives use d(beta*E)/dB = beta*a (mu = 1, B = mu_b).
    """
    out = []
    for pole in cs.poles:
        e = to_mpfr(pole.energy)
        row = []
        for lv in pole.members:
            x = beta * e
            if variable is None:
                row.append((x, lv.multiplicity))
            elif variable == "B":
                row.append((DerivCarrier(x, beta * to_mpfr(lv.form.a), 0, "B"), lv.multiplicity))
            elif variable == "beta":
                row.append((DerivCarrier(x, e, 0, "beta"), lv.multiplicity))
            else:
                raise ValueError(f"unknown derivative variable {variable!r}")
        out.append(row)
    return out


def _merge_factors(row):
    """Combine members whose carriers coincide into one factor of summed order."""
    merged = []
    for x, m in row:
        for i, (y, k) in enumerate(merged):
            if _same(x, y):
                merged[i] = (y, k + m)
                break
        else:
            merged.append((x, m))
    return merged


def _same(x, y):
    if isinstance(x, DerivCarrier):
        return x.value == y.value and x.d1 == y.d1 and x.d2 == y.d2
    return x == y


def _pole_residue(j, rows, variable):
    row_j = rows[j]
    order = sum(m for _, m in row_j)
    lam = -(row_j[0][0].value if variable else row_j[0][0])
    # derivative carriers inside the cluster add eps**-1 and eps**-2 terms
    top = order + 1 if variable else order - 1
    one = mpfr(1)
    coeffs = [gmpy2.exp(lam)]
    for k in range(1, top + 1):
        coeffs.append(coeffs[-1] / k)
    if gmpy2.is_infinite(coeffs[0]):
        raise OverflowError("exp(lambda) overflowed the mpfr exponent range")
    g = Jet(coeffs)
    # same product with every coefficient replaced by its magnitude: bounds the
    # rounding error of the jet products, which can cancel internally
    bound = Jet(coeffs[:order])
    for k, row in enumerate(rows):
        if k == j:
            continue
        for x, m in _merge_factors(row):
            c0 = x + lam
            g = jet_mul(g, linear_recip_pow(c0, m, top))
            bound = jet_mul(bound, linear_recip_pow(-magnitude(c0), m, order - 1))
    bound = abs(bound[order - 1])
    if not variable:
        return g[order - 1], bound
    # in-cluster offsets delta_l = beta*E_l + lam have zero value but carry slopes
    s1 = None
    s2 = None
    for x, m in row_j:
        delta = DerivCarrier(0, x.d1, x.d2, x.tag)
        s1 = delta * m if s1 is None else s1 + delta * m
        dd = delta * delta * m
        s2 = dd if s2 is None else s2 + dd
    h1 = -s1
    h2 = (s1 * s1 + s2) * (one / 2)
    return g[order - 1] + h1 * g[order] + h2 * g[order + 1], bound


def _lost_bits(total, terms, bounds, rows, variable) -> float:
    """log2 of (largest residue magnitude bound) / |sum|, per derivative order."""
    biggest = max(bounds)
    if not variable:
        return _log2(biggest) - _log2(total)
    scale = max(abs(x.d1) for row in rows for x, _ in row)
    z = _log2(total.value)
    lost = _log2(biggest) - z
    if scale > 0:
        ls = _log2(scale)
        for k, comp in ((1, "d1"), (2, "d2")):
            biggest = max(abs(getattr(t, comp)) for t in terms)
            if biggest > 0:
                lost = max(lost, _log2(biggest) - (z + k * ls))
    return lost


def residue_sum(
    cs: ClusteredSpectrum, beta, bits: int, *, variable=None, guard: int = 32
) -> ResidueSum:
    """Sum the residues at a fixed working precision of ``bits``.

    ``variable`` selects derivative propagation: None (plain values), "B"
    (field) or "beta" (inverse temperature).  Does not escalate.
    """
    if bits < MIN_BITS:
        raise ValueError(f"bits must be at least {MIN_BITS}")
    with gmpy2.context(precision=bits):
        b = to_mpfr(beta)
        if not b > 0:
            raise ValueError("beta must be positive")
        rows = _scaled_energies(cs, b, variable)
        pairs = [_pole_residue(j, rows, variable) for j in range(len(rows))]
        terms = tuple(t for t, _ in pairs)
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        lost = _lost_bits(total, terms, [b for _, b in pairs], rows, variable)
    return ResidueSum(total, terms, bits, lost, guard)


def evaluate_with_escalation(
    cs: ClusteredSpectrum, beta, policy: PrecisionPolicy = DEFAULT_POLICY, *, variable=None
):
    """Evaluate Z, doubling precision until the cancellation check passes.

    Returns ``(value, bits_used)``; ``value`` is a DerivCarrier when a
    derivative ``variable`` is requested.  Raises CancellationError once
    ``policy.max_bits`` is exhausted.
    """
    res = None
    for bits in policy.schedule():
        res = residue_sum(cs, beta, bits, variable=variable, guard=policy.cancellation_guard)
        if res.reliable:
            value = res.value
            z = value.value if variable else value
            if not z > 0:
                raise ArithmeticError(f"non-positive partition function {z}")
            return value, bits
        log.debug("residue sum lost %.1f of %d bits, escalating", res.lost_bits, bits)
    raise CancellationError(
        f"residue sum lost {res.lost_bits:.1f} bits at the maximum precision of "
        f"{res.bits} bits (guard {policy.cancellation_guard})",
        res.bits,
        res.lost_bits,
    )


def z_residue(cs: ClusteredSpectrum, beta, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Partition function from the residue sum, with precision escalation."""
    return evaluate_with_escalation(cs, beta, policy)[0]


def partition_function(spec: Spectrum, params: ModelParams, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Cluster ``spec`` at ``params`` and evaluate Z."""
    return z_residue(cluster(spec, params), params.beta, policy)


def z_nondegenerate(spec: Spectrum, params: ModelParams, bits: int = 256):
    """Closed form for simple, distinct levels.

    sum_k exp(-beta*E_k) * prod_{l != k} 1/(beta*(E_l - E_k)).
    """
    if any(lv.multiplicity != 1 for lv in spec.levels):
        raise ValueError("z_nondegenerate requires every multiplicity to be 1")
    with gmpy2.context(precision=bits):
        if params.exact:
            values = [lv.form.evaluate(params.mu_b, params.coupling) for lv in spec.levels]
            if len(set(values)) != len(values):
                raise ValueError("energies coincide at these parameters")
            energies = [to_mpfr(v) for v in values]
        else:
            mu_b = to_mpfr(params.mu_b)
            J = to_mpfr(params.j) * mu_b
            energies = [to_mpfr(lv.form.a) * mu_b + to_mpfr(lv.form.b) * J for lv in spec.levels]
            if len(set(energies)) != len(energies):
                raise ValueError("energies coincide at these parameters")
        beta = params.beta_mpfr()
        total = mpfr(0)
        for k, ek in enumerate(energies):
            term = gmpy2.exp(-beta * ek)
            for l, el in enumerate(energies):
                if l != k:
                    term /= beta * (el - ek)
            total += term
    return total


def z_single_spin_closed(n: int, beta_mu_b, bits: int = 256):
    """(1/n!) * (sinh(x/2)/(x/2))**n with x = beta*muB."""
    if n < 1:
        raise ValueError("n must be at least 1")
    with gmpy2.context(precision=bits):
        x = to_mpfr(beta_mu_b)
        if not x > 0:
            raise ValueError("beta*muB must be positive")
        h = x / 2
        return (gmpy2.sinh(h) / h) ** n / math.factorial(n)


def anchor_value(dim: int, bits: int = 256):
    """The beta -> 0 limit 1/(dim-1)!."""
    with gmpy2.context(precision=bits):
        return mpfr(1) / math.factorial(dim - 1)

