"""Synthetic clinic-shaped training data and CSV interchange.

The real clinic dataset behind the shipped model shape (375 rows, 25
features, 3 activity labels) is not distributable. The generator below
mirrors its shape and puts the three classes in disjoint regions of the
activity-minutes plane, so the generated data is linearly separable with
a comfortable margin in every one-vs-rest problem.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import DomainError
from .features import FEATURE_NAMES, FEATURES, LABELS, N_FEATURES
from .svm import LabeledDataset

# (moderate minutes, vigorous minutes) band centers per class; the bands
# are far apart relative to their widths, which is what guarantees
# separability of every class from the other two.
_ACTIVITY_BANDS = {
    "sedentary": (50.0, 20.0),
    "mild": (900.0, 30.0),
    "vigorous": (450.0, 900.0),
}
_BAND_HALF_WIDTH = 50.0

_IDX_MODERATE = FEATURE_NAMES.index("weekly_moderate_activity_minutes")
_IDX_VIGOROUS = FEATURE_NAMES.index("weekly_vigorous_activity_minutes")


def generate_dataset(rows: int = 375, seed: int = 0) -> LabeledDataset:
    """Clinic-shaped synthetic intake data, near-balanced across classes."""
    if rows < len(LABELS) * 2:
        raise DomainError("need at least two rows per class")
    rng = np.random.RandomState(seed)
    features = np.empty((rows, N_FEATURES))
    labels = [LABELS[i % len(LABELS)] for i in range(rows)]
    for j, spec in enumerate(FEATURES):
        mid = (spec.minimum + spec.maximum) / 2.0
        spread = (spec.maximum - spec.minimum) / 6.0
        col = rng.normal(mid, spread, size=rows)
        features[:, j] = np.clip(col, spec.minimum, spec.maximum)
    for i, label in enumerate(labels):
        mod_c, vig_c = _ACTIVITY_BANDS[label]
        features[i, _IDX_MODERATE] = mod_c + rng.uniform(-_BAND_HALF_WIDTH, _BAND_HALF_WIDTH)
        features[i, _IDX_VIGOROUS] = vig_c + rng.uniform(-_BAND_HALF_WIDTH, _BAND_HALF_WIDTH)
    return LabeledDataset(features=features, labels=labels)


def save_csv(dataset: LabeledDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_NAMES) + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(v) for v in row.tolist()] + [label])


def load_csv(path: str | Path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(FEATURE_NAMES) + ["label"]:
            raise DomainError("CSV header must be the 25 canonical feature names plus 'label'")
        rows = []
        labels = []
        for record in reader:
            if len(record) != N_FEATURES + 1:
                raise DomainError(f"row width {len(record)} != {N_FEATURES + 1}")
            rows.append([float(v) for v in record[:-1]])
            labels.append(record[-1])
    if not rows:
        raise DomainError("CSV contains no data rows")
    return LabeledDataset(features=np.array(rows), labels=labels)
