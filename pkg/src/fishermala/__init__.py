"""Gradient-adaptive MCMC with learned inverse-Fisher preconditioning.

The package bundles the adaptive square-root preconditioner recursions,
the benchmark target distributions, the MALA/HMC transition kernels, the
jump-distance optimality checks, chain diagnostics, and the experiment
harness that ties them together.
"""

__version__ = "0.1.0"

from .diagnostics import EssReport, ReplicateSummary, aggregate_replicates, ess, frobenius_distance
from .harness import ExperimentConfig, ExperimentResult, run_experiment
from .preconditioner import (
    PairedEstimator,
    SqrtPreconditioner,
    normalized_matrix,
    paired_update,
    sqrt_init,
    sqrt_update,
    sqrt_update_general,
    woodbury_update,
)
from .samplers import (
    AdaMalaKernel,
    ChainState,
    FisherMalaKernel,
    HmcKernel,
    MalaKernel,
    MmalaKernel,
    StepSizeController,
    h_term,
    leapfrog,
    mala_propose,
)
from .targets import (
    GaussianTarget,
    LogisticRegressionTarget,
    TargetModel,
    gaussian_2d_correlated,
    gaussian_gp_target,
    gaussian_inhomogeneous,
    load_csv_dataset,
    standard_normal_target,
    synthetic_logreg_target,
)
from .theory import EsjdProblem, esjd_objective, jump_covariance_mc, optimal_preconditioner

__all__ = [
    "__version__",
    "EssReport",
    "ReplicateSummary",
    "aggregate_replicates",
    "ess",
    "frobenius_distance",
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "PairedEstimator",
    "SqrtPreconditioner",
    "normalized_matrix",
    "paired_update",
    "sqrt_init",
    "sqrt_update",
    "sqrt_update_general",
    "woodbury_update",
    "AdaMalaKernel",
    "ChainState",
    "FisherMalaKernel",
    "HmcKernel",
    "MalaKernel",
    "MmalaKernel",
    "StepSizeController",
    "h_term",
    "leapfrog",
    "mala_propose",
    "GaussianTarget",
    "LogisticRegressionTarget",
    "TargetModel",
    "gaussian_2d_correlated",
    "gaussian_gp_target",
    "gaussian_inhomogeneous",
    "load_csv_dataset",
    "standard_normal_target",
    "synthetic_logreg_target",
    "EsjdProblem",
    "esjd_objective",
    "jump_covariance_mc",
    "optimal_preconditioner",
]
