"""Activity-level user classifier: feature extraction, one-vs-rest linear
SVM, synthetic data generation, and model serialization."""

from .data import generate_dataset, load_csv, save_csv
from .features import (
    FEATURE_NAMES,
    FEATURES,
    LABELS,
    N_FEATURES,
    MissingFeatureError,
    extract_features,
    full_intake_dialog,
)
from .svm import (
    Hyperparams,
    LabeledDataset,
    SvmModel,
    evaluate,
    load_model,
    model_from_dict,
    model_to_dict,
    objective,
    save_model,
    split,
    train,
)

__all__ = [
    "FEATURE_NAMES",
    "FEATURES",
    "LABELS",
    "N_FEATURES",
    "Hyperparams",
    "LabeledDataset",
    "MissingFeatureError",
    "SvmModel",
    "evaluate",
    "extract_features",
    "full_intake_dialog",
    "generate_dataset",
    "load_csv",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "objective",
    "save_csv",
    "save_model",
    "split",
    "train",
]
