"""Bosonized EIT dark-state polaritons: Fock-space models, adiabatic storage,
light splitting and entanglement generation."""
from .branches import CoherentBranches
from .config import ConfigError, RunConfig, emit_config, parse_config
from .dynamics import ProtocolResult, propagate
from .entanglement import (
    EntanglementReport,
    ecs_gram_oracle,
    pm_projection,
    run_ensemble_entanglement,
    run_single_photon_protocol,
    run_three_mode_cat_protocol,
    run_two_mode_cat_protocol,
    w_decomposition,
)
from .fock import ModeSpace, StateVector, bipartite_entropy, partial_trace, von_neumann_entropy
from .models import EnsembleChain, MLevelSystem, build_hamiltonian, build_space
from .polariton import dark_state, dsp_coefficients, mixing_angles, polariton_weights, verify_dsp
from .protocols import protocol_release_split, protocol_store, store_and_split

__version__ = "0.1.0"

__all__ = [
    "CoherentBranches",
    "ConfigError",
    "RunConfig",
    "emit_config",
    "parse_config",
    "ProtocolResult",
    "propagate",
    "EntanglementReport",
    "ecs_gram_oracle",
    "pm_projection",
    "run_ensemble_entanglement",
    "run_single_photon_protocol",
    "run_three_mode_cat_protocol",
    "run_two_mode_cat_protocol",
    "w_decomposition",
    "ModeSpace",
    "StateVector",
    "bipartite_entropy",
    "partial_trace",
    "von_neumann_entropy",
    "EnsembleChain",
    "MLevelSystem",
    "build_hamiltonian",
    "build_space",
    "dark_state",
    "dsp_coefficients",
    "mixing_angles",
    "polariton_weights",
    "verify_dsp",
    "protocol_release_split",
    "protocol_store",
    "store_and_split",
    "__version__",
]
