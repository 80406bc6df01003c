import random
from fractions import Fraction

import pytest

from projthermo.spectra import EnergyForm, Level, Spectrum


def random_spectrum(rng: random.Random, max_dim=8, distinct=True, with_b=False):
    """Random spectrum with quarter-integer coefficients; distinct forms by default."""
    dim_levels = rng.randint(1, max_dim)
    forms = set()
    while len(forms) < dim_levels:
        a = Fraction(rng.randint(-12, 12), 4)
        b = Fraction(rng.randint(-8, 8), 4) if with_b else Fraction(0)
        forms.add(EnergyForm(a, b))
    forms = sorted(forms)
    if distinct:
        levels = tuple(Level(f, 1) for f in forms)
    else:
        levels = []
        budget = max_dim
        for f in forms:
            if budget <= 0:
                break
            m = rng.randint(1, max(1, min(3, budget)))
            levels.append(Level(f, m))
            budget -= m
        levels = tuple(levels)
    return Spectrum(levels, sum(lv.multiplicity for lv in levels))


@pytest.fixture
def rng():
    return random.Random(20261015)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
