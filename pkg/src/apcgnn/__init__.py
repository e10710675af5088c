"""Adaptive patient-centric graph neural network for diabetes classification."""

from .data import (
    CLASS_NAMES,
    FEATURE_NAMES,
    Cohort,
    SyntheticConfig,
    generate_synthetic_cohort,
    load_cohort_csv,
)
from .estimator import ApcGnnClassifier
from .explain import PredictionReport, predict_new
from .metrics import EvalReport
from .persist import load_model, save_model
from .training import (
    AblationReport,
    TrainConfig,
    TrainedModel,
    evaluate,
    run_ablations,
    train,
    train_and_evaluate,
)

__version__ = "0.1.0"

__all__ = [
    "ApcGnnClassifier",
    "AblationReport",
    "CLASS_NAMES",
    "Cohort",
    "EvalReport",
    "FEATURE_NAMES",
    "PredictionReport",
    "SyntheticConfig",
    "TrainConfig",
    "TrainedModel",
    "evaluate",
    "generate_synthetic_cohort",
    "load_cohort_csv",
    "load_model",
    "predict_new",
    "run_ablations",
    "save_model",
    "train",
    "train_and_evaluate",
    "__version__",
]
