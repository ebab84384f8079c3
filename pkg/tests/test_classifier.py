"""One-vs-rest linear SVM tests.

The duplicated-dataset example is checked through an objective-equivalence
oracle: duplicating every row while halving C leaves the (full-batch)
subgradient identical, so the whole training trajectory — and the decision
function — must match.
"""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

from coachai.classifier import (
    FEATURE_NAMES,
    LABELS,
    N_FEATURES,
    Hyperparams,
    LabeledDataset,
    MissingFeatureError,
    evaluate,
    extract_features,
    generate_dataset,
    load_csv,
    load_model,
    model_from_dict,
    model_to_dict,
    objective,
    save_csv,
    save_model,
    split,
    train,
)
from coachai.errors import DomainError


@pytest.fixture(scope="module")
def dataset():
    return generate_dataset(375, seed=0)


@pytest.fixture(scope="module")
def model(dataset):
    return train(dataset, Hyperparams(seed=0))


class TestFeatures:
    def test_feature_count_is_25(self):
        assert N_FEATURES == 25
        assert len(FEATURE_NAMES) == 25

    def test_extract_orders_canonically(self):
        values = {name: float(i) for i, name in enumerate(FEATURE_NAMES)}
        x = extract_features(values)
        assert x.tolist() == [float(i) for i in range(25)]

    def test_missing_feature_rejected(self):
        values = {name: 1.0 for name in FEATURE_NAMES[:-1]}
        with pytest.raises(MissingFeatureError):
            extract_features(values)

    def test_non_numeric_rejected(self):
        values = {name: 1.0 for name in FEATURE_NAMES}
        values["age"] = "banana"
        with pytest.raises(DomainError):
            extract_features(values)


class TestData:
    def test_shape_and_labels(self, dataset):
        assert dataset.features.shape == (375, 25)
        assert set(dataset.labels) == set(LABELS)

    def test_csv_round_trip(self, dataset, tmp_path):
        path = tmp_path / "d.csv"
        save_csv(dataset, path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join([*FEATURE_NAMES, "label"])
        again = load_csv(path)
        assert np.array_equal(again.features, dataset.features)
        assert again.labels == dataset.labels

    def test_generation_deterministic(self):
        a = generate_dataset(100, seed=3)
        b = generate_dataset(100, seed=3)
        assert np.array_equal(a.features, b.features)
        assert a.labels == b.labels


class TestTraining:
    def test_accuracy_and_runtime(self, dataset):
        start = time.perf_counter()
        train_set, test_set = split(dataset, test_fraction=0.2, seed=0)
        m = train(train_set, Hyperparams(seed=0))
        elapsed = time.perf_counter() - start
        assert evaluate(m, train_set) == 1.0
        assert evaluate(m, test_set) >= 0.95
        assert elapsed < 5.0

    def test_deterministic_bit_identical(self, dataset):
        m1 = train(dataset, Hyperparams(seed=0))
        m2 = train(dataset, Hyperparams(seed=0))
        assert np.array_equal(m1.weights, m2.weights)
        assert np.array_equal(m1.biases, m2.biases)
        assert model_to_dict(m1) == model_to_dict(m2)

    def test_duplicated_rows_c_halved_equivalence(self, dataset):
        """Objective oracle: each row twice with C/2 has the same objective
        and gradient as the original, so decision functions must agree."""
        params = Hyperparams(C=1.0, seed=0)
        doubled = LabeledDataset(
            features=np.vstack([dataset.features, dataset.features]),
            labels=dataset.labels + dataset.labels,
        )
        halved = Hyperparams(C=0.5, seed=0)
        m1 = train(dataset, params)
        m2 = train(doubled, halved)
        probes = dataset.features[:200]
        d1 = m1.decision_scores(probes)
        d2 = m2.decision_scores(probes)
        assert np.max(np.abs(d1 - d2)) < 1e-9
        # and the binary objectives agree: doubling rows with C/2 leaves
        # J(w, b) = 0.5 ||w||^2 + C * sum(hinge) unchanged.
        z1 = (dataset.features - m1.feature_means) / m1.feature_stds
        z2 = (doubled.features - m2.feature_means) / m2.feature_stds
        labels1 = np.array(dataset.labels)
        labels2 = np.array(doubled.labels)
        for k, label in enumerate(LABELS):
            y1 = np.where(labels1 == label, 1.0, -1.0)
            y2 = np.where(labels2 == label, 1.0, -1.0)
            j1 = objective(z1, y1, m1.weights[k], m1.biases[k], params.C)
            j2 = objective(z2, y2, m2.weights[k], m2.biases[k], halved.C)
            assert j2 == pytest.approx(j1, rel=1e-9)

    def test_requires_all_three_classes(self):
        d = generate_dataset(30, seed=1)
        keep = [i for i, label in enumerate(d.labels) if label != "mild"]
        partial = LabeledDataset(features=d.features[keep],
                                 labels=[d.labels[i] for i in keep])
        with pytest.raises(DomainError):
            train(partial, Hyperparams(seed=0))

    def test_split_stratified_and_disjoint(self, dataset):
        train_set, test_set = split(dataset, test_fraction=0.2, seed=4)
        assert len(train_set.labels) + len(test_set.labels) == 375
        for label in LABELS:
            assert label in train_set.labels and label in test_set.labels
        rows = {tuple(r) for r in dataset.features}
        assert {tuple(r) for r in train_set.features} | {
            tuple(r) for r in test_set.features
        } == rows


class TestSerialization:
    def test_round_trip_prediction_equality_1000_probes(self, model, tmp_path):
        path = tmp_path / "m.json"
        save_model(model, path)
        again = load_model(path)
        rng = np.random.RandomState(7)
        probes = rng.uniform(0, 100, size=(1000, 25))
        assert np.array_equal(
            model.decision_scores(probes), again.decision_scores(probes)
        )
        for x in probes[:50]:
            label_a, scores_a = model.predict(x)
            label_b, scores_b = again.predict(x)
            assert label_a == label_b
            assert np.array_equal(scores_a, scores_b)

    def test_format_versioned(self, model, tmp_path):
        doc = model_to_dict(model)
        assert doc["format_version"] == 1
        doc["format_version"] = 99
        with pytest.raises(DomainError):
            model_from_dict(doc)

    def test_json_is_plain(self, model):
        json.dumps(model_to_dict(model))  # must not raise


class TestPrediction:
    def test_predict_reports_argmax(self, model, dataset):
        x = dataset.features[0]
        label, scores = model.predict(x)
        assert label == model.labels[int(np.argmax(scores))]
        assert scores.shape == (3,)

    def test_constant_feature_standardization_safe(self):
        rng = np.random.RandomState(0)
        features = rng.uniform(0, 10, size=(30, 25))
        features[:, 3] = 42.0  # constant column must not divide by zero
        labels = (["vigorous"] * 10) + (["mild"] * 10) + (["sedentary"] * 10)
        features[0:10, 0] = 100.0
        features[10:20, 0] = 50.0
        features[20:30, 0] = 0.0
        m = train(LabeledDataset(features=features, labels=labels), Hyperparams(seed=0))
        assert np.all(np.isfinite(m.decision_scores(features)))
