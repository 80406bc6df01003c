"""Internal energy, magnetisation and susceptibility from the residue engine.

Derivatives of ln Z are obtained by forward propagation of
:class:`~projthermo.jets.DerivCarrier` values through the residue sum: one
pass in the field B (giving M and chi) and one in beta (giving U).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np

from .jets import DerivCarrier
from .residues import DEFAULT_POLICY, PrecisionPolicy, evaluate_with_escalation
from .spectra import ClusteredSpectrum, ModelParams, Spectrum, build, cluster, to_mpfr

log = logging.getLogger(__name__)

CHI_SLACK = 1e-20


@dataclass(frozen=True)
class ModelSpec:
    model: str
    n: int

    def build(self) -> Spectrum:
        return build(self.model, self.n)


@dataclass(frozen=True)
class LogDerivatives:
    """Z with d ln Z and d^2 ln Z in one variable, rounded at ``bits``."""

    Z: object
    first: object
    second: object
    bits: int


@dataclass
class ThermoPoint:
    t: float
    Z: object = math.nan
    U: object = math.nan
    M: object = math.nan
    M_per_particle: object = math.nan
    chi: object = math.nan
    bits_used: int = 0
    error: str | None = field(default=None)

    @property
    def ok(self) -> bool:
        return self.error is None


def log_derivatives(
    spec: Spectrum | ClusteredSpectrum,
    params: ModelParams,
    variable: str,
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> LogDerivatives:
    cs = spec if isinstance(spec, ClusteredSpectrum) else cluster(spec, params)
    value, bits = evaluate_with_escalation(cs, params.beta, policy, variable=variable)
    assert isinstance(value, DerivCarrier)
    with gmpy2.context(precision=bits):
        z = value.value
        first = value.d1 / z
        second = value.d2 / z - first * first
    return LogDerivatives(z, first, second, bits)


def internal_energy(spec, params: ModelParams, policy: PrecisionPolicy = DEFAULT_POLICY):
    """U = -d ln Z / d beta, in units of muB."""
    d = log_derivatives(spec, params, "beta", policy)
    with gmpy2.context(precision=d.bits):
        return -d.first / to_mpfr(params.mu_b)


def magnetisation(spec, params: ModelParams, policy: PrecisionPolicy = DEFAULT_POLICY):
    """M = beta^-1 d ln Z / dB, in units of mu."""
    d = log_derivatives(spec, params, "B", policy)
    with gmpy2.context(precision=d.bits):
        return d.first / params.beta_mpfr()


def susceptibility(spec, params: ModelParams, policy: PrecisionPolicy = DEFAULT_POLICY, particles=None):
    """chi = (1/N) dM/dB, in units of mu/B."""
    d = log_derivatives(spec, params, "B", policy)
    if particles is None:
        particles = spec.particles if isinstance(spec, Spectrum) else 1
    with gmpy2.context(precision=d.bits):
        return d.second / params.beta_mpfr() / particles * to_mpfr(params.mu_b)


def thermo_point(spec: Spectrum, t, j=0, policy: PrecisionPolicy = DEFAULT_POLICY) -> ThermoPoint:
    params = ModelParams.from_temperature(t, j)
    cs = cluster(spec, params)
    db = log_derivatives(cs, params, "B", policy)
    de = log_derivatives(cs, params, "beta", policy)
    bits = max(db.bits, de.bits)
    n = spec.particles
    with gmpy2.context(precision=bits):
        beta = params.beta_mpfr()
        m = db.first / beta
        chi = db.second / beta / n
        point = ThermoPoint(
            t=t, Z=db.Z, U=-de.first, M=m, M_per_particle=m / n, chi=chi, bits_used=bits
        )
    if chi < -CHI_SLACK:
        raise ArithmeticError(f"negative susceptibility {chi} at t={t}")
    return point


def _point_or_failure(args) -> ThermoPoint:
    spec, t, j, policy = args
    try:
        return thermo_point(spec, t, j, policy)
    except (ArithmeticError, OverflowError) as exc:
        log.warning("sweep point t=%s failed: %s", t, exc)
        return ThermoPoint(t=t, error=f"{type(exc).__name__}: {exc}")


def sweep(
    model: ModelSpec | Spectrum,
    t_grid: Sequence,
    j=0,
    policy: PrecisionPolicy = DEFAULT_POLICY,
    workers: int | None = None,
) -> list[ThermoPoint]:
    """Evaluate one ThermoPoint per temperature; failures are recorded, not raised."""
    if len(t_grid) == 0:
        raise ValueError("temperature grid is empty")
    if any(not t > 0 for t in t_grid):
        raise ValueError("temperatures must be positive")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("temperature grid must be strictly increasing")
    spec = model.build() if isinstance(model, ModelSpec) else model
    jobs = [(spec, t, j, policy) for t in t_grid]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_or_failure, jobs))
    return [_point_or_failure(job) for job in jobs]


def temperature_grid(tmin: float, tmax: float, points: int, kind: str = "log") -> list[float]:
    if points < 1:
        raise ValueError("need at least one grid point")
    if not 0 < tmin <= tmax:
        raise ValueError("need 0 < tmin <= tmax")
    if points == 1:
        return [float(tmin)]
    if kind == "log":
        grid = np.geomspace(tmin, tmax, points)
    elif kind == "linear":
        grid = np.linspace(tmin, tmax, points)
    else:
        raise ValueError(f"unknown grid kind {kind!r}")
    return [float(x) for x in grid]
