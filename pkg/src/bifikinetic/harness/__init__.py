"""Experiment harness: model pairs, pipelines, error studies."""
from .config import MODEL_PAIRS, ExperimentConfig
from .experiments import (
    ErrorReport,
    empirical_error,
    evaluate_surrogate,
    observed_order,
    run_bifi_eval,
    run_convergence_in_N,
    run_eps_sweep,
    run_offline,
    run_order_study,
)
from .models import CountingSolver, ModelPair, build_pair, identical_pair

__all__ = [
    "MODEL_PAIRS",
    "ExperimentConfig",
    "ErrorReport",
    "empirical_error",
    "evaluate_surrogate",
    "observed_order",
    "run_bifi_eval",
    "run_convergence_in_N",
    "run_eps_sweep",
    "run_offline",
    "run_order_study",
    "CountingSolver",
    "ModelPair",
    "build_pair",
    "identical_pair",
]
