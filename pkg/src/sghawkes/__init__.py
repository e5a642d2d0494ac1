"""Bayesian inference for multivariate Hawkes processes with exponential
kernels: stochastic-gradient EM, variational, and Langevin fitters driven by
subsampled time windows, full-data Gibbs baselines, and the evaluation
harness around them."""

from .core import (
    EXACT,
    LEWIS,
    BranchingProbs,
    CompensatorMode,
    EventSequence,
    GammaPriorSet,
    HawkesParams,
    approx_errors,
    branching_probs,
    compensator,
    compensator_matrix,
    complete_log_likelihood,
    intensity,
    lambdas_at_events,
    log_likelihood,
    log_likelihood_flags,
    read_events_csv,
    responsibility_sums,
    write_events_csv,
)
from .harness import budgeted_fit, ingest_events, load_config, run_experiment
from .mcmc import fit_mcmc, sample_branching
from .metrics import (
    EstimationReport,
    bodl_rbodl,
    coverage_and_width,
    estimation_report,
    info_loss_bound,
    info_loss_ratio,
    interval_score,
    kernel_ise,
    mae_mu,
    rmise,
    time_rescaling_qq,
)
from .results import CredibleIntervals, FitResult, SampleChain
from .schedule import Budget, StepSchedule, step_size
from .sgem import adaptive_delta, fit_sgem, init_params
from .sgld import fit_sgld, grad_potential, potential, sgld_step_scale
from .sgvi import elbo, fit_sgvi
from .simulate import (
    ScenarioSpec,
    custom_scenario,
    dense3,
    load_dataset,
    save_dataset,
    simulate,
    sparse10,
    stationary_rate,
)
from .subsample import WindowDraw, draw_window

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "LEWIS",
    "BranchingProbs",
    "Budget",
    "CompensatorMode",
    "CredibleIntervals",
    "EstimationReport",
    "EventSequence",
    "FitResult",
    "GammaPriorSet",
    "HawkesParams",
    "SampleChain",
    "ScenarioSpec",
    "StepSchedule",
    "WindowDraw",
    "adaptive_delta",
    "approx_errors",
    "bodl_rbodl",
    "branching_probs",
    "budgeted_fit",
    "compensator",
    "compensator_matrix",
    "complete_log_likelihood",
    "coverage_and_width",
    "custom_scenario",
    "dense3",
    "draw_window",
    "elbo",
    "estimation_report",
    "fit_mcmc",
    "fit_sgem",
    "fit_sgld",
    "fit_sgvi",
    "grad_potential",
    "info_loss_bound",
    "info_loss_ratio",
    "ingest_events",
    "init_params",
    "intensity",
    "interval_score",
    "kernel_ise",
    "lambdas_at_events",
    "load_config",
    "load_dataset",
    "log_likelihood",
    "log_likelihood_flags",
    "responsibility_sums",
    "mae_mu",
    "potential",
    "read_events_csv",
    "rmise",
    "run_experiment",
    "sample_branching",
    "save_dataset",
    "sgld_step_scale",
    "simulate",
    "sparse10",
    "stationary_rate",
    "step_size",
    "time_rescaling_qq",
    "write_events_csv",
]
