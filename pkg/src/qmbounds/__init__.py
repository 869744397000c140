"""Sensitivity bounds for multiparameter phase estimation with commuting generators."""
from .bounds import (
    BoundReport,
    MomentData,
    check_state_dependent_bounds,
    gain_factor,
    heisenberg_bound,
    localization_envelope,
    mode_separable_bound,
    p_producible_bound,
    partition_bound,
    shot_noise_bound,
    shot_noise_rank,
    weak_qcrb,
)
from .fisher import Povm, classical_fisher_matrix, covariance_matrix, fluctuation_matrix, qfi_matrix, sld_operators
from .hilbert import Basis, GeneratorSet, ModeConfig, QuantumState, build_generators, phase_evolve
from .states import (
    Direction,
    EntanglementSpec,
    lambda_sep_multinoon,
    mepe_multinoon,
    meps_state,
    msps_state,
    mspe_noon_product,
    p_producible_noon_chain,
    sample_state,
)
from .transforms import trace_weighted_crb, transform_generators, verify_qfi_transform, weighted_bound

__version__ = "0.1.0"
