"""One-vs-rest linear SVM trained by deterministic hinge subgradient descent.

Per binary problem the objective is

    (1/2) ||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))

minimized by full-batch subgradient steps with 1/t step decay. The batch
(order-independent) gradient makes training reproducible bit for bit and
makes a row-duplicated dataset with C halved follow the identical
trajectory, which is the auditing hook the tests rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError
from .features import FEATURE_NAMES, LABELS, N_FEATURES

MODEL_FORMAT_VERSION = 1

DEFAULT_C = 1.0
DEFAULT_EPOCHS = 200
DEFAULT_LEARNING_RATE = 0.01


@dataclass(frozen=True)
class Hyperparams:
    C: float = DEFAULT_C
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise DomainError("C must be positive")
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be positive")


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, 25)
    labels: list[str]
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise DomainError(f"feature matrix must be (n, {N_FEATURES})")
        if len(self.labels) != self.features.shape[0]:
            raise DomainError("label count must match row count")
        unknown = set(self.labels) - set(LABELS)
        if unknown:
            raise DomainError(f"unknown labels {sorted(unknown)}")

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass
class SvmModel:
    weights: np.ndarray        # (3, 25), row order = LABELS
    biases: np.ndarray         # (3,)
    feature_means: np.ndarray  # (25,)
    feature_stds: np.ndarray   # (25,), strictly positive
    labels: tuple[str, ...] = LABELS
    metadata: dict = field(default_factory=dict)

    def decision_scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != N_FEATURES:
            raise DomainError(f"feature width must be {N_FEATURES}")
        if not np.all(np.isfinite(x)):
            raise DomainError("features must be finite")
        z = (x - self.feature_means) / self.feature_stds
        return z @ self.weights.T + self.biases

    def predict(self, x: np.ndarray) -> tuple[str, np.ndarray]:
        """Label by argmax decision value; ties resolve to the fixed order."""
        scores = self.decision_scores(x)
        return self.labels[int(np.argmax(scores))], scores


def split(
    dataset: LabeledDataset, test_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic stratified split; every class lands in both halves."""
    if not (0.0 < test_fraction < 1.0):
        raise DomainError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.RandomState(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    labels = np.array(dataset.labels)
    for label in LABELS:
        idx = np.flatnonzero(labels == label)
        if len(idx) == 0:
            continue
        if len(idx) < 2:
            raise DomainError(f"class {label!r} has fewer than 2 rows; cannot stratify")
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        n_test = max(1, min(len(idx) - 1, n_test))
        test_idx.extend(idx[:n_test].tolist())
        train_idx.extend(idx[n_test:].tolist())
    train_idx.sort()
    test_idx.sort()
    return (
        LabeledDataset(dataset.features[train_idx], [dataset.labels[i] for i in train_idx]),
        LabeledDataset(dataset.features[test_idx], [dataset.labels[i] for i in test_idx]),
    )


def _fit_standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    stds = np.where(stds > 0.0, stds, 1.0)  # constant features pass through
    return means, stds


def _train_binary(
    z: np.ndarray, y: np.ndarray, params: Hyperparams
) -> tuple[np.ndarray, float]:
    """Full-batch subgradient descent on one binary hinge problem."""
    n, d = z.shape
    w = np.zeros(d)
    b = 0.0
    for t in range(params.epochs):
        eta = params.learning_rate / (1.0 + t)
        margins = y * (z @ w + b)
        violators = margins < 1.0
        grad_w = w - params.C * (y[violators, None] * z[violators]).sum(axis=0)
        grad_b = -params.C * y[violators].sum()
        w = w - eta * grad_w
        b = b - eta * grad_b
    return w, b


def objective(z: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, C: float) -> float:
    """Binary hinge objective; used as the equivalence oracle in tests."""
    hinge = np.maximum(0.0, 1.0 - y * (z @ w + b))
    return 0.5 * float(w @ w) + C * float(hinge.sum())


def train(dataset: LabeledDataset, params: Hyperparams) -> SvmModel:
    present = set(dataset.labels)
    if present != set(LABELS):
        missing = sorted(set(LABELS) - present)
        raise DomainError(f"training data is missing classes {missing}")
    means, stds = _fit_standardization(dataset.features)
    z = (dataset.features - means) / stds
    weights = np.zeros((len(LABELS), N_FEATURES))
    biases = np.zeros(len(LABELS))
    labels = np.array(dataset.labels)
    for k, label in enumerate(LABELS):
        y = np.where(labels == label, 1.0, -1.0)
        weights[k], biases[k] = _train_binary(z, y, params)
    return SvmModel(
        weights=weights,
        biases=biases,
        feature_means=means,
        feature_stds=stds,
        metadata={
            "seed": params.seed,
            "epochs": params.epochs,
            "C": params.C,
            "learning_rate": params.learning_rate,
        },
    )


def evaluate(model: SvmModel, dataset: LabeledDataset) -> float:
    scores = model.decision_scores(dataset.features)
    predicted = [model.labels[i] for i in np.argmax(scores, axis=1)]
    hits = sum(p == t for p, t in zip(predicted, dataset.labels))
    return hits / dataset.n


# ---------------------------------------------------------------------------
# Serialization: versioned JSON model document
# ---------------------------------------------------------------------------

def model_to_dict(model: SvmModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "labels": list(model.labels),
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "feature_names": list(FEATURE_NAMES),
        "metadata": model.metadata,
    }


def model_from_dict(doc: dict) -> SvmModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DomainError(f"unsupported model format version {doc.get('format_version')!r}")
    return SvmModel(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        biases=np.asarray(doc["biases"], dtype=np.float64),
        feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
        feature_stds=np.asarray(doc["feature_stds"], dtype=np.float64),
        labels=tuple(doc["labels"]),
        metadata=dict(doc.get("metadata", {})),
    )


def save_model(model: SvmModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path: str | Path) -> SvmModel:
    return model_from_dict(json.loads(Path(path).read_text()))
