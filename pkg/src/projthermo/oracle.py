"""Monte Carlo check of the pure-state canonical ensemble.

States are drawn uniformly (Fubini-Study) on CP^{d-1} by normalising vectors
of i.i.d. standard complex Gaussians.  The Gibbs weight exp(-beta H(x)) is
applied by importance weighting, which is only trustworthy while the weights
stay bounded, so the oracle refuses low temperatures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectra import ModelParams, Spectrum

MAX_SPREAD = 8.0


class OutOfRegimeError(ValueError):
    """beta times the spectral spread exceeds what importance weighting can handle."""


@dataclass(frozen=True)
class OracleConfig:
    samples: int = 10**6
    seed: int = 0
    batch: int = 1 << 15
    blocks: int = 100
    max_spread: float = MAX_SPREAD

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least two samples")
        if self.batch < 1 or self.blocks < 2:
            raise ValueError("batch must be positive and blocks at least 2")


@dataclass(frozen=True)
class StateSample:
    amplitudes: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    std_error: float
    n_samples: int

    def sigma_distance(self, exact: float) -> float:
        if self.std_error == 0:
            return 0.0 if exact == self.mean else math.inf
        return abs(self.mean - exact) / self.std_error


@dataclass(frozen=True)
class DensityMatrixEstimate:
    """Estimated density matrix.

    ``std_error`` is complex: its real and imaginary parts are the standard
    errors of the real and imaginary parts of each entry.
    """

    matrix: np.ndarray
    std_error: np.ndarray
    n_samples: int
    block_sums: tuple = field(default=(), repr=False, compare=False)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def sample_states(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Fubini-Study uniform unit vectors as rows of an (n, dim) array."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    z = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def sample_uniform(dim: int, rng: np.random.Generator) -> StateSample:
    return StateSample(sample_states(dim, 1, rng)[0])


def slot_energies(spec: Spectrum, params: ModelParams) -> np.ndarray:
    """Energy of every eigen-slot (levels expanded by multiplicity), float64."""
    mu_b = float(params.mu_b)
    coupling = float(params.j) * mu_b
    return np.array([float(f.a) * mu_b + float(f.b) * coupling for f in spec.slots()])


def slot_moments(spec: Spectrum) -> np.ndarray:
    """mu*S_z of every eigen-slot, i.e. -dE/dB with mu = 1."""
    return np.array([-float(f.a) for f in spec.slots()])


def h_expectation(s: StateSample, spec: Spectrum, params: ModelParams) -> float:
    """Expectation of H in the pure state ``s``."""
    amps = np.asarray(s.amplitudes)
    if amps.shape != (spec.dim,):
        raise ValueError(f"state has {amps.size} amplitudes, spectrum has dim {spec.dim}")
    return float(np.dot(np.abs(amps) ** 2, slot_energies(spec, params)))


def _check_regime(energies: np.ndarray, beta: float, config: OracleConfig):
    spread = beta * float(energies.max() - energies.min())
    if spread > config.max_spread:
        raise OutOfRegimeError(
            f"beta*(Emax-Emin) = {spread:.3g} exceeds {config.max_spread}; "
            "importance weights are too uneven at this temperature"
        )


def _batches(config: OracleConfig):
    n_batches = -(-config.samples // config.batch)
    seeds = np.random.SeedSequence(config.seed).spawn(n_batches)
    left = config.samples
    for ss in seeds:
        n = min(config.batch, left)
        left -= n
        yield np.random.default_rng(ss), n


def _weights(spec, params, config):
    """Per-sample (probabilities, weights), drawn batch by batch."""
    energies = slot_energies(spec, params)
    beta = float(params.beta_mpfr())
    _check_regime(energies, beta, config)
    # weights are exp(-beta*(H - Emin)); the factor exp(-beta*Emin) is restored in Z
    shift = energies.min()
    for rng, n in _batches(config):
        psi = sample_states(spec.dim, n, rng)
        p = np.abs(psi) ** 2
        h = p @ energies
        yield psi, p, h, np.exp(-beta * (h - shift))


def _jackknife_ratio(num: np.ndarray, den: np.ndarray):
    """Delete-one jackknife mean and standard error of sum(num)/sum(den)."""
    n = num.size
    sn, sd = num.sum(), den.sum()
    loo = (sn - num) / (sd - den)
    mean_loo = loo.mean()
    err = math.sqrt((n - 1) / n * float(np.sum((loo - mean_loo) ** 2)))
    return float(sn / sd), err


def estimate_Z(spec: Spectrum, params: ModelParams, config: OracleConfig = OracleConfig()) -> OracleEstimate:
    """(1/(dim-1)!) times the sample mean of exp(-beta H(x))."""
    w = np.concatenate([b[3] for b in _weights(spec, params, config)])
    beta = float(params.beta_mpfr())
    scale = math.exp(-beta * slot_energies(spec, params).min()) / math.factorial(spec.dim - 1)
    mean = float(w.mean())
    err = float(w.std(ddof=1)) / math.sqrt(w.size)
    return OracleEstimate(mean * scale, err * scale, int(w.size))


def estimate_U_M(
    spec: Spectrum, params: ModelParams, config: OracleConfig = OracleConfig()
) -> tuple[OracleEstimate, OracleEstimate]:
    """Gibbs-weighted averages of H(x) and mu*S_z(x), with jackknife errors."""
    moments = slot_moments(spec)
    hs, ms, ws = [], [], []
    for _, p, h, w in _weights(spec, params, config):
        hs.append(h)
        ms.append(p @ moments)
        ws.append(w)
    h, m, w = (np.concatenate(x) for x in (hs, ms, ws))
    u_mean, u_err = _jackknife_ratio(h * w, w)
    m_mean, m_err = _jackknife_ratio(m * w, w)
    n = int(w.size)
    return OracleEstimate(u_mean, u_err, n), OracleEstimate(m_mean, m_err, n)


def estimate_density_matrix(
    spec: Spectrum, params: ModelParams, config: OracleConfig = OracleConfig()
) -> DensityMatrixEstimate:
    """Gibbs-weighted average of the projectors psi psi^dagger.

    Standard errors come from a block jackknife over ``config.blocks``
    contiguous groups of samples.
    """
    dim = spec.dim
    n_blocks = min(config.blocks, config.samples)
    edges = np.linspace(0, config.samples, n_blocks + 1).astype(int)
    num = np.zeros((n_blocks, dim, dim), dtype=complex)
    den = np.zeros(n_blocks)
    start = 0
    for psi, _, _, w in _weights(spec, params, config):
        stop = start + len(w)
        block = np.searchsorted(edges, np.arange(start, stop), side="right") - 1
        for b in np.unique(block):
            sel = block == b
            wp = psi[sel] * w[sel, None]
            num[b] += wp.T @ psi[sel].conj()
            den[b] += w[sel].sum()
        start = stop
    # symmetrise so every estimate is Hermitian
    num = 0.5 * (num + num.conj().transpose(0, 2, 1))
    total_num, total_den = num.sum(axis=0), den.sum()
    rho = total_num / total_den
    loo = (total_num[None] - num) / (total_den - den)[:, None, None]
    dev = loo - loo.mean(axis=0)
    c = (n_blocks - 1) / n_blocks
    err = np.sqrt(c * (dev.real**2).sum(axis=0)) + 1j * np.sqrt(c * (dev.imag**2).sum(axis=0))
    return DensityMatrixEstimate(rho, err, config.samples, (num, den))


def trace_energy(rho: DensityMatrixEstimate, spec: Spectrum, params: ModelParams) -> OracleEstimate:
    """sum_k E_k rho_kk, with a block jackknife error."""
    e = slot_energies(spec, params)
    num, den = rho.block_sums
    per_block = np.real(np.einsum("bkk,k->b", num, e))
    n_blocks = len(den)
    total_num, total_den = per_block.sum(), den.sum()
    loo = (total_num - per_block) / (total_den - den)
    err = math.sqrt((n_blocks - 1) / n_blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return OracleEstimate(float(total_num / total_den), err, rho.n_samples)
