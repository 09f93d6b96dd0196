"""Robust sparse recovery with a continuous mixed-norm fidelity.

Recovers sparse signals from linear measurements corrupted by heavy-tailed
(symmetric alpha-stable) impulsive noise, by blending every l_p^p residual
penalty over an exponent range instead of committing to a single p.
"""

__version__ = "0.1.0"

from .cmn import CmnParams, cmn_value, phi_weight, phi_weight_oracle, surrogate_value
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    TrialSpec,
    gen_gaussian_matrix,
    gen_sparse_signal,
    make_instance,
    preference_ratio,
    run_cs_sweep,
    run_experiment,
    run_noise_sweep,
    run_preference_experiment,
    snr_db,
)
from .linalg import soft_threshold, spectral_norm_sq
from .solver import (
    Problem,
    SolveReport,
    SolverConfig,
    SolverDivergenceError,
    SolverState,
    solve_cmn_alm,
    solve_lp_admm,
)
from .stable_noise import StableNoiseParams, ggd_pdf, sample_sas

__all__ = [
    "CmnParams",
    "ExperimentConfig",
    "ExperimentResult",
    "Problem",
    "SolveReport",
    "SolverConfig",
    "SolverDivergenceError",
    "SolverState",
    "StableNoiseParams",
    "TrialSpec",
    "cmn_value",
    "gen_gaussian_matrix",
    "gen_sparse_signal",
    "ggd_pdf",
    "make_instance",
    "phi_weight",
    "phi_weight_oracle",
    "preference_ratio",
    "run_cs_sweep",
    "run_experiment",
    "run_noise_sweep",
    "run_preference_experiment",
    "sample_sas",
    "snr_db",
    "soft_threshold",
    "solve_cmn_alm",
    "solve_lp_admm",
    "spectral_norm_sq",
    "surrogate_value",
]
