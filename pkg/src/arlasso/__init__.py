"""Robust high-dimensional variable selection via penalized quantile regression.

Weighted-L1 penalized quantile regression (WR-Lasso), its all-ones special
case (R-Lasso), the two-step adaptive variant with SCAD-derived weights
(AR-Lasso), least-squares comparators, optimality diagnostics, and a seeded
Monte Carlo harness for benchmarking under heavy-tailed noise.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    FitResult,
    PenaltySpec,
    RngSpec,
    validate_dataset,
)
from .objective import (
    ScadParams,
    SubgradientInterval,
    objective_value,
    quantile_loss,
    quantile_subgradient,
    scad_derivative,
)
from .qrsolver import (
    SolverConfig,
    WrLassoSolver,
    fit_wrlasso,
    lp_oracle,
    prox_check_loss,
    standardize_columns,
    unstandardize_coefficients,
)
from .lssolver import LsPenaltySpec, fit_l2_oracle, fit_lasso_ls, fit_scad_ls
from .pipeline import ar_lasso, r_lasso
from .simgen import CovModel, NoiseModel, beta_star, gen_design, gen_noise, make_dataset
from .diag import KktReport, kkt_check, normality_diagnostic, sign_consistency
from .harness import (
    ExperimentConfig,
    GridSpec,
    MetricsRow,
    replicate_tables,
    run_cell,
    sign_consistency_experiment,
    tune_lambda,
)

__all__ = [
    "__version__",
    "Dataset", "FitResult", "PenaltySpec", "RngSpec", "validate_dataset",
    "ScadParams", "SubgradientInterval", "objective_value", "quantile_loss",
    "quantile_subgradient", "scad_derivative",
    "SolverConfig", "WrLassoSolver", "fit_wrlasso", "lp_oracle",
    "prox_check_loss", "standardize_columns", "unstandardize_coefficients",
    "LsPenaltySpec", "fit_l2_oracle", "fit_lasso_ls", "fit_scad_ls",
    "ar_lasso", "r_lasso",
    "CovModel", "NoiseModel", "beta_star", "gen_design", "gen_noise", "make_dataset",
    "KktReport", "kkt_check", "normality_diagnostic", "sign_consistency",
    "ExperimentConfig", "GridSpec", "MetricsRow", "replicate_tables",
    "run_cell", "sign_consistency_experiment", "tune_lambda",
]
