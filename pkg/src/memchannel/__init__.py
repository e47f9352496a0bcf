"""Repeated-use state transfer through U(1) spin chains with channel memory."""
from .chain import (
    BoundaryAmplitudes,
    ChainSpec,
    SpectralPropagator,
    amplitude,
    build_single_particle_hamiltonian,
    diagonalize,
    propagator,
    pst_boundary_closed_form,
    pst_provider,
    spectral_provider,
)
from .entanglement import (
    TwoQubitState,
    apply_local_map,
    bell_state,
    concurrence,
    distribution_profile,
    zero_windows,
)
from .exceptions import BudgetError, ContractionError, GuardError
from .maps import (
    b_term,
    capacity_upper_bound,
    choi,
    coherent_information_gad,
    gad_superoperator,
    pd_superoperator,
    reconstruct_map,
    second_use_map,
)
from .memory import fidelity_sequence, memory_factor, memory_factor_direct, nth_use_fidelity, reduce_memory_factor
from .motzkin import ExcitationPath, enumerate_paths, motzkin_number, path_to_term
from .oracle import ManyBodyModel, Oracle, ProtocolSchedule, sector_fidelity_for, oracle_fidelity

__version__ = "0.1.0"

__all__ = [
    "BoundaryAmplitudes",
    "BudgetError",
    "ChainSpec",
    "ContractionError",
    "ExcitationPath",
    "GuardError",
    "ManyBodyModel",
    "Oracle",
    "ProtocolSchedule",
    "SpectralPropagator",
    "TwoQubitState",
    "amplitude",
    "sector_fidelity_for",
    "apply_local_map",
    "b_term",
    "bell_state",
    "build_single_particle_hamiltonian",
    "capacity_upper_bound",
    "choi",
    "coherent_information_gad",
    "concurrence",
    "diagonalize",
    "distribution_profile",
    "enumerate_paths",
    "fidelity_sequence",
    "gad_superoperator",
    "memory_factor",
    "memory_factor_direct",
    "motzkin_number",
    "nth_use_fidelity",
    "oracle_fidelity",
    "path_to_term",
    "pd_superoperator",
    "propagator",
    "pst_boundary_closed_form",
    "pst_provider",
    "reconstruct_map",
    "reduce_memory_factor",
    "second_use_map",
    "spectral_provider",
    "zero_windows",
]
