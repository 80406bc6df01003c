"""Exact energy spectra of the spin models and their pole structure.

Energies are kept as exact linear forms ``a * muB + b * J`` with rational
coefficients, so deciding whether two levels sit at the same pole never
depends on floating point.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from numbers import Rational
from typing import Iterable, Sequence

import gmpy2

MODELS = ("single", "noninteracting", "ising")


class ClusteringWarning(UserWarning):
    """Levels with different exact energy forms were merged numerically."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # 0.2 on the command line means 1/5, not its binary neighbour
        return Fraction(repr(x))
    raise TypeError(f"cannot interpret {x!r} as a rational number")


@dataclass(frozen=True, order=True)
class EnergyForm:
    """Energy ``a * muB + b * J`` with exact rational coefficients."""

    a: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", _frac(self.a))
        object.__setattr__(self, "b", _frac(self.b))

    def evaluate(self, mu_b, coupling):
        """Value at field energy ``mu_b`` and coupling ``coupling``.

        Exact when both arguments are rational.
        """
        if self.b == 0:
            return self.a * mu_b
        return self.a * mu_b + self.b * coupling

    def shifted(self, da=0, db=0) -> "EnergyForm":
        return EnergyForm(self.a + _frac(da), self.b + _frac(db))

    def __str__(self):
        return f"{self.a}*muB + {self.b}*J"


@dataclass(frozen=True)
class Level:
    form: EnergyForm
    multiplicity: int

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be a positive integer")


@dataclass(frozen=True)
class Spectrum:
    """Energy levels with multiplicities.

    ``N`` is the number of spin-1/2 particles; it is 0 for the single
    spin-n/2 model.
    """

    levels: tuple[Level, ...]
    dim: int
    model: str = "custom"
    N: int = 0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        total = sum(lv.multiplicity for lv in self.levels)
        if total != self.dim:
            raise ValueError(f"multiplicities sum to {total}, expected dim {self.dim}")

    @property
    def particles(self) -> int:
        """Particle count used for per-particle quantities (1 for a single spin)."""
        return max(self.N, 1)

    def slots(self) -> list[EnergyForm]:
        """One entry per eigenstate, each level repeated by its multiplicity."""
        out = []
        for lv in self.levels:
            out.extend([lv.form] * lv.multiplicity)
        return out

    def shifted(self, da=0, db=0) -> "Spectrum":
        levels = tuple(Level(lv.form.shifted(da, db), lv.multiplicity) for lv in self.levels)
        return Spectrum(levels, self.dim, self.model, self.N)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "N": self.N,
            "dim": self.dim,
            "levels": [
                {"a": str(lv.form.a), "b": str(lv.form.b), "mult": lv.multiplicity}
                for lv in self.levels
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Spectrum":
        levels = tuple(
            Level(EnergyForm(Fraction(d["a"]), Fraction(d["b"])), int(d["mult"]))
            for d in data["levels"]
        )
        dim = int(data.get("dim", sum(lv.multiplicity for lv in levels)))
        return cls(levels, dim, data.get("model", "custom"), int(data.get("N", 0)))

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ModelParams:
    """Model parameters.

    ``beta`` is 1/(k_B T) in the energy unit of ``mu_b``; with the default
    ``mu_b = 1`` it is the reduced inverse temperature muB/(k_B T).  ``j`` is
    the ratio J/muB.  The magnetic moment is taken as mu = 1, so B = mu_b.
    """

    beta: object
    j: Fraction = Fraction(0)
    mu_b: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "j", _frac(self.j))
        if not isinstance(self.mu_b, gmpy2.mpfr):
            object.__setattr__(self, "mu_b", _frac(self.mu_b))
        if not self.mu_b > 0:
            raise ValueError("the field must be on: mu_b > 0 (B = 0 is excluded)")
        b = to_mpfr(self.beta)
        if not (b > 0) or not gmpy2.is_finite(b):
            raise ValueError(f"beta must be finite and positive, got {self.beta!r}")

    @classmethod
    def from_temperature(cls, t, j=0, mu_b=1) -> "ModelParams":
        """Build from reduced temperature ``t = k_B T / muB``."""
        if isinstance(t, str):
            t = gmpy2.mpfr(t) if any(c in t for c in ".eE") else Fraction(t)
        if not t > 0:
            raise ValueError("temperature must be positive")
        if isinstance(t, (int, Fraction)) and not isinstance(mu_b, gmpy2.mpfr):
            return cls(1 / (Fraction(t) * _frac(mu_b)), j, mu_b)
        return cls(_Reciprocal(t, mu_b), j, mu_b)

    @property
    def coupling(self):
        """Absolute coupling J = j * mu_b."""
        return self.j * self.mu_b

    @property
    def exact(self) -> bool:
        return isinstance(self.mu_b, Fraction)

    def beta_mpfr(self):
        """beta rounded at the current gmpy2 precision."""
        return to_mpfr(self.beta)


class _Reciprocal:
    """1/(t*scale) held symbolically so it can be rounded at any working precision."""

    __slots__ = ("t", "scale")

    def __init__(self, t, scale=1):
        self.t = t
        self.scale = scale

    def __gt__(self, other):
        return to_mpfr(self) > other

    def __repr__(self):
        return f"1/({self.t!r}*{self.scale!r})"

    def __eq__(self, other):
        return isinstance(other, _Reciprocal) and (self.t, self.scale) == (other.t, other.scale)

    def __hash__(self):
        return hash(("recip", self.t, self.scale))

    def __reduce__(self):
        return (_Reciprocal, (self.t, self.scale))


def to_mpfr(x):
    """Round ``x`` to an mpfr at the current gmpy2 precision."""
    if isinstance(x, _Reciprocal):
        return 1 / (to_mpfr(x.t) * to_mpfr(x.scale))
    if isinstance(x, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
    return gmpy2.mpfr(x)


def build_single_spin(n: int) -> Spectrum:
    """Single spin-n/2 in a field: levels ``-(n/2 - k) muB`` for k = 0..n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    half = Fraction(n, 2)
    levels = tuple(Level(EnergyForm(-(half - k)), 1) for k in range(n + 1))
    return Spectrum(levels, n + 1, "single", 0)


def build_noninteracting(N: int) -> Spectrum:
    """N free spin-1/2 particles: level k has energy ``-(N/2 - k) muB``, degeneracy C(N, k)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    half = Fraction(N, 2)
    levels = tuple(Level(EnergyForm(-(half - k)), comb(N, k)) for k in range(N + 1))
    return Spectrum(levels, 2**N, "noninteracting", N)


def sector_multiplicity(N: int, s: Fraction) -> int:
    """Number of total-spin-s multiplets in N spin-1/2 particles."""
    x = Fraction(N, 2) - s
    if x.denominator != 1:
        raise ValueError(f"s={s} incompatible with N={N}")
    x = int(x)
    hi = comb(N, x) if x >= 0 else 0
    lo = comb(N, x - 1) if x >= 1 else 0
    return hi - lo


def build_ising(N: int) -> Spectrum:
    """Heisenberg-coupled spins on the complete graph.

    Levels are labelled by total spin s and S_z = m with energy
    ``-m muB - J/2 (s(s+1) - 3N/4)``.  Odd N uses half-integer s.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    top = Fraction(N, 2)
    s = top - int(top)
    levels = []
    while s <= top:
        d = sector_multiplicity(N, s)
        b = -Fraction(1, 2) * (s * (s + 1) - Fraction(3 * N, 4))
        m = -s
        while m <= s:
            levels.append(Level(EnergyForm(-m, b), d))
            m += 1
        s += 1
    return Spectrum(tuple(levels), 2**N, "ising", N)


def build(model: str, n: int) -> Spectrum:
    if model == "single":
        return build_single_spin(n)
    if model == "noninteracting":
        return build_noninteracting(n)
    if model == "ising":
        return build_ising(n)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


@dataclass(frozen=True)
class Pole:
    """A distinct energy value of a clustered spectrum.

    ``energy`` is exact (Fraction) on the rational path.  ``members`` keeps
    the original levels so field derivatives can follow each one.
    """

    energy: object
    form: EnergyForm
    order: int
    members: tuple[Level, ...] = field(default=())

    def __post_init__(self):
        if not self.members:
            object.__setattr__(self, "members", (Level(self.form, self.order),))


@dataclass(frozen=True)
class ClusteredSpectrum:
    poles: tuple[Pole, ...]
    dim: int
    exact: bool = True
    mixed_forms: bool = False

    def __post_init__(self):
        if sum(p.order for p in self.poles) != self.dim:
            raise ValueError("pole orders must sum to dim")

    @property
    def max_order(self) -> int:
        return max(p.order for p in self.poles)

    def permuted(self, order: Sequence[int]) -> "ClusteredSpectrum":
        return ClusteredSpectrum(
            tuple(self.poles[i] for i in order), self.dim, self.exact, self.mixed_forms
        )


def _items(spec) -> Iterable[Level]:
    if isinstance(spec, ClusteredSpectrum):
        for p in spec.poles:
            yield from p.members
    else:
        yield from spec.levels


def cluster(spec, params: ModelParams, rtol=None) -> ClusteredSpectrum:
    """Merge levels with equal energy at ``params`` into poles.

    With rational ``params.mu_b`` the comparison is exact.  Otherwise values
    are rounded at the current gmpy2 precision and merged when they agree to
    ``rtol`` (default ``2**-(prec/2)``) relative to the spectral spread; a
    :class:`ClusteringWarning` is issued if that merges different forms.
    """
    levels = list(_items(spec))
    exact = params.exact
    if exact:
        mu_b, coupling = params.mu_b, params.coupling
        values = [lv.form.evaluate(mu_b, coupling) for lv in levels]
    else:
        mu_b = to_mpfr(params.mu_b)
        coupling = to_mpfr(params.j) * mu_b
        values = [
            to_mpfr(lv.form.a) * mu_b + to_mpfr(lv.form.b) * coupling for lv in levels
        ]

    groups: list[list[int]] = []
    if exact:
        index: dict = {}
        for i, v in enumerate(values):
            if v in index:
                groups[index[v]].append(i)
            else:
                index[v] = len(groups)
                groups.append([i])
    else:
        if rtol is None:
            rtol = gmpy2.mpfr(2) ** (-(gmpy2.get_context().precision // 2))
        scale = max([abs(v) for v in values] + [mu_b])
        order = sorted(range(len(values)), key=lambda i: values[i])
        for i in order:
            if groups and abs(values[i] - values[groups[-1][0]]) <= rtol * scale:
                groups[-1].append(i)
            else:
                groups.append([i])
        groups.sort(key=lambda g: g[0])

    poles = []
    mixed = False
    for g in groups:
        members = tuple(levels[i] for i in g)
        forms = {m.form for m in members}
        if len(forms) > 1:
            mixed = True
        poles.append(
            Pole(values[g[0]], min(forms), sum(m.multiplicity for m in members), members)
        )
    if mixed and not exact:
        warnings.warn(
            "tolerance clustering merged levels with different exact energy forms; "
            "parameters are at or near a fine-tuned degeneracy",
            ClusteringWarning,
            stacklevel=2,
        )
    dim = sum(p.order for p in poles)
    return ClusteredSpectrum(tuple(poles), dim, exact, mixed)
