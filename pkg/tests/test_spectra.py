import json
from fractions import Fraction
from math import comb
from pathlib import Path

import gmpy2
import pytest
from hypothesis import given, strategies as st

from projthermo.spectra import (
    ClusteringWarning,
    EnergyForm,
    Level,
    ModelParams,
    Spectrum,
    build,
    build_ising,
    build_noninteracting,
    build_single_spin,
    cluster,
    sector_multiplicity,
)

GOLDEN = Path(__file__).parent / "golden"
half = Fraction(1, 2)


def test_single_spin_half():
    spec = build_single_spin(1)
    assert [(lv.form.a, lv.multiplicity) for lv in spec.levels] == [(-half, 1), (half, 1)]
    assert spec.dim == 2


def test_single_spin_zero_is_trivial():
    spec = build_single_spin(0)
    assert spec.dim == 1
    assert spec.levels[0].form == EnergyForm(0)


def test_single_spin_four():
    spec = build_single_spin(4)
    assert sorted(lv.form.a for lv in spec.levels) == [-2, -1, 0, 1, 2]
    assert sum(lv.multiplicity for lv in spec.levels) == 5


def test_noninteracting_two():
    spec = build_noninteracting(2)
    assert [(lv.form.a, lv.multiplicity) for lv in spec.levels] == [(-1, 1), (0, 2), (1, 1)]


@pytest.mark.parametrize("N", range(1, 9))
def test_noninteracting_dimension(N):
    spec = build_noninteracting(N)
    assert spec.dim == 2**N
    assert [lv.multiplicity for lv in spec.levels] == [comb(N, k) for k in range(N + 1)]


def test_noninteracting_five_largest_multiplicity():
    mults = [lv.multiplicity for lv in build_noninteracting(5).levels]
    assert max(mults) == 10 and mults.count(10) == 2


def test_ising_two():
    spec = build_ising(2)
    by_b = {}
    for lv in spec.levels:
        by_b.setdefault(lv.form.b, []).append(lv)
    assert sorted(lv.form.a for lv in by_b[Fraction(-1, 4)]) == [-1, 0, 1]
    assert [lv.form.a for lv in by_b[Fraction(3, 4)]] == [0]
    assert all(lv.multiplicity == 1 for lv in spec.levels)
    assert sum(lv.multiplicity for lv in spec.levels) == 4


@pytest.mark.parametrize("N", range(1, 10))
def test_ising_completeness_and_multiplicities(N):
    spec = build_ising(N)
    assert spec.dim == 2**N
    assert all(lv.multiplicity >= 1 for lv in spec.levels)
    # levels come in (2s+1)-fold m-ladders that share b and the multiplicity
    ladders = {}
    for lv in spec.levels:
        ladders.setdefault(lv.form.b, []).append(lv)
    for ladder in ladders.values():
        s = max(lv.form.a for lv in ladder)
        assert len(ladder) == 2 * s + 1
        assert {lv.multiplicity for lv in ladder} == {sector_multiplicity(N, s)}


def test_sector_multiplicity_table():
    # N=4: s=2 -> 1, s=1 -> 3, s=0 -> 2 ; N=3: s=3/2 -> 1, s=1/2 -> 2
    assert [sector_multiplicity(4, Fraction(s)) for s in (2, 1, 0)] == [1, 3, 2]
    assert [sector_multiplicity(3, Fraction(s, 2)) for s in (3, 1)] == [1, 2]


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("j", [Fraction(0), Fraction(1, 5), Fraction(3)])
def test_ising_ground_level(n, j):
    spec = build_ising(2 * n)
    params = ModelParams(1, j)
    ground = min(spec.levels, key=lambda lv: lv.form.evaluate(1, params.coupling))
    # (s=n, m=n): a = -n and b = -(n(n+1) - 3n/2)/2
    assert ground.form == EnergyForm(-n, -Fraction(1, 2) * (n * (n + 1) - Fraction(3 * n, 2)))


def test_energy_form_denominators():
    for N in range(1, 9):
        for spec in (build_noninteracting(N), build_ising(N)):
            for lv in spec.levels:
                assert 4 % lv.form.a.denominator == 0
                assert 4 % lv.form.b.denominator == 0


def test_multiplicity_mismatch_rejected():
    with pytest.raises(ValueError):
        Spectrum((Level(EnergyForm(0), 2),), 3)


def test_bad_sizes_rejected():
    with pytest.raises(ValueError):
        build_single_spin(-1)
    with pytest.raises(ValueError):
        build_noninteracting(0)
    with pytest.raises(ValueError):
        build_ising(0)
    with pytest.raises(ValueError):
        build("potts", 2)


def test_cluster_noninteracting_two():
    cs = cluster(build_noninteracting(2), ModelParams(1))
    assert [p.order for p in cs.poles] == [1, 2, 1]


def test_cluster_ising_two_zero_coupling_merges():
    cs = cluster(build_ising(2), ModelParams(1, 0))
    poles = sorted(cs.poles, key=lambda p: p.energy)
    assert [p.energy for p in poles] == [-1, 0, 1]
    assert [p.order for p in poles] == [1, 2, 1]
    assert cs.mixed_forms


def test_cluster_rejects_zero_field():
    with pytest.raises(ValueError):
        ModelParams(1, 0, mu_b=0)


def test_cluster_is_idempotent():
    params = ModelParams(2, Fraction(1, 5))
    once = cluster(build_ising(4), params)
    assert cluster(once, params) == once


@given(st.integers(1, 6), st.fractions(0, 3, max_denominator=6))
def test_rational_clustering_is_exact(N, j):
    params = ModelParams(1, j)
    spec = build_ising(N)
    cs = cluster(spec, params)
    values = [lv.form.evaluate(1, j) for lv in spec.levels]
    assert len(cs.poles) == len(set(values))
    assert sum(p.order for p in cs.poles) == spec.dim
    for p in cs.poles:
        assert all(m.form.evaluate(1, j) == p.energy for m in p.members)


def test_tolerance_clustering_warns_on_mixed_forms():
    # at j = 1 the singlet and the m = -1 triplet level of N = 2 coincide
    with gmpy2.context(precision=128):
        params = ModelParams(1, 1, mu_b=gmpy2.mpfr(1))
        with pytest.warns(ClusteringWarning):
            cs = cluster(build_ising(2), params)
    assert len(cs.poles) == 3
    assert not cs.exact


def test_json_round_trip():
    spec = build_ising(3)
    again = Spectrum.from_json(spec.to_json())
    assert again == spec


@pytest.mark.parametrize("model,n", [("ising", 2), ("noninteracting", 5), ("single", 3)])
def test_golden_json(model, n):
    expected = json.loads((GOLDEN / f"{model}_{n}.json").read_text())
    assert build(model, n).to_dict() == expected
