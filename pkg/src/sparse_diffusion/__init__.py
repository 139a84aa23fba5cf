"""Sparse diffusion LMS over adaptive networks: simulator and steady-state theory."""

from .analysis import (GammaTerms, MomentSet, PerformancePrediction, StabilityError, bias_bound, bias_predict,
                       block_max_norm_blockdiag, block_max_norm_matrix, block_max_norm_vector, build_F_approx,
                       build_moments, check_mean_stability, dominance_interval, estimate_gamma_terms, msd_predict,
                       step_size_bounds)
from .engine import (AdaptiveGamma, EngineConfig, FixedGamma, NetworkState, RunResult, adaptive_gamma_local,
                     atc_step, cta_step, run_monte_carlo, run_monte_carlo_many, run_realization)
from .metrics import LearningCurve, SteadyStateStats, differential_msd, network_msd_instant, steady_state, to_db
from .regularizer import RegularizerSpec, eval_f, subgradient, subgradient_max_norm
from .signal_model import (GroundTruthSchedule, NodeProfile, active_truth, generate_run_data, make_sparse_truth,
                           nested_sparse_schedule, sample, sample_profiles, substream_rng)
from .topology import (CombinationMatrices, Topology, block_extend, build_uniform_combiners,
                       random_geometric_topology, validate_combiners)

__version__ = "0.1.0"

__all__ = [
    "GammaTerms",
    "MomentSet",
    "PerformancePrediction",
    "StabilityError",
    "bias_bound",
    "bias_predict",
    "block_max_norm_blockdiag",
    "block_max_norm_matrix",
    "block_max_norm_vector",
    "build_F_approx",
    "build_moments",
    "check_mean_stability",
    "dominance_interval",
    "estimate_gamma_terms",
    "msd_predict",
    "step_size_bounds",
    "AdaptiveGamma",
    "EngineConfig",
    "FixedGamma",
    "NetworkState",
    "RunResult",
    "adaptive_gamma_local",
    "atc_step",
    "cta_step",
    "run_monte_carlo",
    "run_monte_carlo_many",
    "run_realization",
    "LearningCurve",
    "SteadyStateStats",
    "differential_msd",
    "network_msd_instant",
    "steady_state",
    "to_db",
    "RegularizerSpec",
    "eval_f",
    "subgradient",
    "subgradient_max_norm",
    "GroundTruthSchedule",
    "NodeProfile",
    "active_truth",
    "generate_run_data",
    "make_sparse_truth",
    "sample",
    "nested_sparse_schedule",
    "sample_profiles",
    "substream_rng",
    "CombinationMatrices",
    "Topology",
    "block_extend",
    "build_uniform_combiners",
    "random_geometric_topology",
    "validate_combiners",
]
