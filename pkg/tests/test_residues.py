import math
import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from projthermo.residues import (
    CancellationError,
    PrecisionPolicy,
    anchor_value,
    evaluate_with_escalation,
    partition_function,
    residue_sum,
    z_nondegenerate,
    z_residue,
    z_single_spin_closed,
)
from projthermo.spectra import EnergyForm, Level, ModelParams, Spectrum, build, cluster

from conftest import random_spectrum

P = 256


def rel(a, b, bits=P):
    with gmpy2.context(precision=bits):
        return abs(a - b) / abs(b)


def two_level(e0, e1):
    return Spectrum((Level(EnergyForm(e0), 1), Level(EnergyForm(e1), 1)), 2)


def test_spin_half_example():
    z = partition_function(build("single", 1), ModelParams(2))
    assert rel(z, mpfr("1.17520119364380145688238185059560081515571798133409587022956541301330756730432389560711745208962339184041953333", P)) < mpfr(2) ** -250


def test_two_level_example():
    z = z_nondegenerate(two_level(0, 1), ModelParams(1))
    with gmpy2.context(precision=P):
        assert rel(z, 1 - gmpy2.exp(-1)) < mpfr(2) ** -250


def test_single_level_is_boltzmann_factor():
    spec = Spectrum((Level(EnergyForm(Fraction(3, 2)), 1),), 1)
    with gmpy2.context(precision=P):
        expected = gmpy2.exp(mpfr(-3) / 2 * 2)
    assert rel(partition_function(spec, ModelParams(2)), expected) < mpfr(2) ** -250
    assert rel(z_nondegenerate(spec, ModelParams(2)), expected) < mpfr(2) ** -250


def test_single_pole_of_order_dim():
    # every level at zero energy: one pole of order d at the origin
    for d in (1, 2, 5, 9):
        spec = Spectrum((Level(EnergyForm(0), d),), d)
        assert rel(partition_function(spec, ModelParams(3)), anchor_value(d)) < mpfr(2) ** -250


def test_closed_form_n3_x1():
    z = partition_function(build("single", 3), ModelParams(1))
    with gmpy2.context(precision=P):
        expected = (gmpy2.sinh(mpfr(0.5)) / mpfr(0.5)) ** 3 / 6
    assert rel(z, expected) < mpfr(2) ** -240
    assert rel(z_single_spin_closed(3, 1), expected) < mpfr(2) ** -250


def test_nondegenerate_rejects_degenerate_input():
    with pytest.raises(ValueError):
        z_nondegenerate(build("noninteracting", 2), ModelParams(1))
    with pytest.raises(ValueError):
        z_nondegenerate(two_level(1, 1), ModelParams(1))


def test_random_three_level_example(rng):
    for _ in range(20):
        e = rng.sample(range(-20, 21), 3)
        spec = Spectrum(tuple(Level(EnergyForm(Fraction(x, 4)), 1) for x in e), 3)
        params = ModelParams(Fraction(rng.randint(1, 12), 4))
        res = residue_sum(cluster(spec, params), params.beta, P)
        assert rel(res.value, z_nondegenerate(spec, params, 2 * P)) <= mpfr(2) ** -(P - 16)


def test_equivalence_in_effective_bits(rng):
    for _ in range(30):
        spec = random_spectrum(rng)
        params = ModelParams(Fraction(rng.randint(1, 16), 4))
        cs = cluster(spec, params)
        value, bits = evaluate_with_escalation(cs, params.beta)
        lost = residue_sum(cs, params.beta, bits).lost_bits
        effective = bits - max(lost, 0)
        assert rel(value, z_nondegenerate(spec, params, 2 * bits)) <= mpfr(2) ** -(effective - 16)


@pytest.mark.parametrize("model", ["single", "noninteracting", "ising"])
@pytest.mark.parametrize("t", [Fraction(1, 10), Fraction(1), Fraction(3)])
def test_ordering_independence(model, t):
    rng = random.Random(7)
    params = ModelParams.from_temperature(t, Fraction(1, 5))
    cs = cluster(build(model, 5), params)
    base = residue_sum(cs, params.beta, P)
    for _ in range(5):
        perm = list(range(len(cs.poles)))
        rng.shuffle(perm)
        other = residue_sum(cs.permuted(perm), params.beta, P)
        effective = P - max(base.lost_bits, other.lost_bits, 0)
        assert rel(other.value, base.value) <= mpfr(2) ** -(effective - 8)


def test_pole_orders_sum_to_dim():
    for model in ("single", "noninteracting", "ising"):
        for n in range(1, 7):
            cs = cluster(build(model, n), ModelParams(1, Fraction(1, 5)))
            assert sum(p.order for p in cs.poles) == cs.dim


@pytest.mark.parametrize("model", ["single", "noninteracting", "ising"])
def test_z_positive(model):
    for n in range(1, 6):
        for t in ("0.01", "0.1", "1", "10", "1000"):
            z = partition_function(build(model, n), ModelParams.from_temperature(t, Fraction(1, 5)))
            assert z > 0


def test_spin_half_never_escalates():
    cs = cluster(build("single", 1), ModelParams(1))
    for t in ("1e-6", "1e-2", "1", "1e3", "1e30"):
        params = ModelParams.from_temperature(t)
        assert evaluate_with_escalation(cs, params.beta)[1] == 256


def test_low_temperature_n5_converges():
    params = ModelParams.from_temperature(Fraction(1, 100))
    value, bits = evaluate_with_escalation(cluster(build("noninteracting", 5), params), params.beta)
    assert bits >= 256 and value > 0


def test_anchor_escalates_and_converges():
    spec = build("noninteracting", 5)
    params = ModelParams.from_temperature(Fraction(10) ** 30)
    value, bits = evaluate_with_escalation(cluster(spec, params), params.beta)
    assert bits > 256
    assert rel(value, anchor_value(32)) < 1e-12


def test_exhausted_precision_fails_loudly():
    spec = build("noninteracting", 5)
    params = ModelParams.from_temperature(Fraction(10) ** 30)
    with pytest.raises(CancellationError) as info:
        z_residue(cluster(spec, params), params.beta, PrecisionPolicy(256, 256))
    assert info.value.bits == 256
    assert info.value.lost_bits > 256 - 32


def test_53_bits_flags_cancellation_at_unit_temperature():
    # at t = 1 the N = 5 residue sum loses more than 50 bits
    params = ModelParams(1)
    res = residue_sum(cluster(build("noninteracting", 5), params), params.beta, 53)
    assert not res.reliable
    assert res.lost_bits > 53 - 32


def test_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(512, 256)
    with pytest.raises(ValueError):
        PrecisionPolicy(32)
    with pytest.raises(ValueError):
        PrecisionPolicy(256, 4096, 300)
    assert list(PrecisionPolicy(256, 1000).schedule()) == [256, 512, 1000]


def test_beta_must_be_positive():
    cs = cluster(build("single", 1), ModelParams(1))
    with pytest.raises(ValueError):
        residue_sum(cs, 0, P)


def test_result_does_not_depend_on_ambient_precision():
    cs = cluster(build("ising", 3), ModelParams(1, Fraction(1, 5)))
    a = z_residue(cs, 1)
    with gmpy2.context(precision=60):
        b = z_residue(cs, 1)
    assert a == b and a.precision == 256
