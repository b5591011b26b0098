"""Secret-protected private evolution of synthetic data."""
from __future__ import annotations

from .accounting import (
    BudgetError,
    SecretBudget,
    compose_naive,
    eta_from_budget,
    gaussian_blowup,
    gaussian_tradeoff,
    r_from_mu,
    secret_from_dp,
)
from .calibration import (
    CalibrationResult,
    CountDistribution,
    SecretIndex,
    calibrate_sigma,
    mixture_blowup,
    poisson_binomial,
    sampling_probs,
    secret_noise,
    solve_weights,
)
from .clustering import kmeans, secret_clustering
from .evolution import PipelineConfig, run_pipeline
from .geometry import EmbeddingSet
from .metrics import coverage_distance, fit_gaussian, frechet_distance

__version__ = "0.1.0"
