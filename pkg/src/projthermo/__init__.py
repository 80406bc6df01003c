"""Canonical-ensemble thermodynamics over pure quantum states."""

__version__ = "0.1.0"

from .residues import (
    CancellationError,
    PrecisionPolicy,
    evaluate_with_escalation,
    partition_function,
    z_nondegenerate,
    z_residue,
    z_single_spin_closed,
)
from .spectra import (
    ClusteredSpectrum,
    EnergyForm,
    Level,
    ModelParams,
    Spectrum,
    build,
    build_ising,
    build_noninteracting,
    build_single_spin,
    cluster,
)
from .thermo import (
    ModelSpec,
    ThermoPoint,
    internal_energy,
    magnetisation,
    susceptibility,
    sweep,
    thermo_point,
)
