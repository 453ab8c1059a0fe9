"""Mode entanglement (concurrence) of a single electron in 1D tight-binding chains."""

from modent.entanglement import (
    ConcurrenceReport,
    pairwise_concurrence,
    participation_ratio,
    spectrum_concurrence,
    state_concurrence,
)
from modent.errors import ConfigError, ConvergenceFailure
from modent.models import (
    Boundary,
    Family,
    Hamiltonian,
    ModelParams,
    PotentialVector,
    assemble_chain_hamiltonian,
    build_hamiltonian,
    build_long_range_correlated,
    build_long_range_hopping,
    build_random_dimer,
    build_slowly_varying,
    realization_rng,
)
from modent.eigensolve import Spectrum, diagonalize, householder_tridiagonalize, tql_implicit
from modent.ensemble import BinnedCurve, EnsembleSpec, GlobalStats, bin_energies, run_ensemble
from modent.sweep import (
    MobilityEdgeEstimate,
    SweepResult,
    TransitionEstimate,
    detect_mobility_edges,
    detect_transition,
    local_maxima,
    sweep_parameter,
)

__version__ = "0.1.0"

__all__ = [
    "BinnedCurve",
    "Boundary",
    "ConcurrenceReport",
    "ConfigError",
    "ConvergenceFailure",
    "EnsembleSpec",
    "Family",
    "GlobalStats",
    "Hamiltonian",
    "MobilityEdgeEstimate",
    "ModelParams",
    "PotentialVector",
    "Spectrum",
    "SweepResult",
    "TransitionEstimate",
    "assemble_chain_hamiltonian",
    "bin_energies",
    "build_hamiltonian",
    "build_long_range_correlated",
    "build_long_range_hopping",
    "build_random_dimer",
    "build_slowly_varying",
    "detect_mobility_edges",
    "detect_transition",
    "diagonalize",
    "householder_tridiagonalize",
    "local_maxima",
    "pairwise_concurrence",
    "participation_ratio",
    "realization_rng",
    "run_ensemble",
    "spectrum_concurrence",
    "state_concurrence",
    "sweep_parameter",
    "tql_implicit",
]
