"""Low-rank matrix regression with noisy or missing covariates.

Library pieces: spectral linear algebra (`linalg`), penalty families
(`penalties`), corrected losses (`loss`), the proximal gradient solver
(`solver`), synthetic data (`simulate`), a scikit-learn style estimator
(`estimator`) and the benchmark CLI (`cli`).
"""

from .estimator import LowRankMatrixRegressor
from .loss import (
    Covariance,
    CovarianceSpec,
    SurrogatePair,
    build_additive_pair,
    build_missing_pair,
    build_uncorrected_pair,
    regularity_params,
)
from .penalties import McpPenalty, NuclearPenalty, Penalty, ScadPenalty, make_penalty
from .simulate import Dataset, TruthSpec, simulate_dataset
from .solver import Problem, SolverOptions, solve, solve_with_restarts

__all__ = [
    "Covariance",
    "CovarianceSpec",
    "Dataset",
    "LowRankMatrixRegressor",
    "McpPenalty",
    "NuclearPenalty",
    "Penalty",
    "Problem",
    "ScadPenalty",
    "SolverOptions",
    "SurrogatePair",
    "TruthSpec",
    "build_additive_pair",
    "build_missing_pair",
    "build_uncorrected_pair",
    "make_penalty",
    "regularity_params",
    "simulate_dataset",
    "solve",
    "solve_with_restarts",
]

__version__ = "0.1.0"
