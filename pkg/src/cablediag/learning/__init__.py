"""Feature extraction and self-contained learners (SVM, AdaBoost,
L2Boost) with standardization, post-training audits, and an exact
round-trip model file format."""

from __future__ import annotations

import numpy as np

from .boosting import (AdaBoostModel, L2BoostModel, Stump, Tree,
                       train_adaboost, train_l2boost)
from .features import (FEATURESETS, MAX_FEATURES, FeatureConfig, Standardizer,
                       build_features, featurize, moments, peak_features)
from .metrics import (ClassificationMetrics, RegressionMetrics,
                      classification_metrics, detection_at_false_alarm,
                      regression_metrics)
from .modelio import (TrainedModel, load_model, model_from_json,
                      model_to_json, save_model)
from .svm import (SvcModel, SvrModel, kernel_matrix, svc_kkt_violation,
                  svr_kkt_violation, train_svc, train_svr)

CLASSIFIER_KINDS = ("svc", "adaboost")
REGRESSOR_KINDS = ("svr", "l2boost")


def train_model(task_id: str, x: np.ndarray, y: np.ndarray,
                feature_names: tuple[str, ...], algorithm: str,
                metadata: dict | None = None, **params) -> TrainedModel:
    """Standardize features on the training set, fit the requested
    learner, and wrap everything into a serializable TrainedModel."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.ndim != 2 or x.shape[1] != len(feature_names):
        raise ValueError("x must be (n, len(feature_names))")
    std = Standardizer.fit(x)
    z = std.transform(x)
    trainers = {"svc": train_svc, "svr": train_svr,
                "adaboost": train_adaboost, "l2boost": train_l2boost}
    if algorithm not in trainers:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    model = trainers[algorithm](z, y, **params)
    meta = {"algorithm": algorithm, "n_train": int(len(x))}
    meta.update(metadata or {})
    return TrainedModel(task_id=task_id, feature_names=tuple(feature_names),
                        standardizer=std, model=model, metadata=meta)


def evaluate(tm: TrainedModel, x: np.ndarray, y: np.ndarray):
    """Classification -> detection/false-alarm rates; regression -> MSE,
    predicted-vs-actual line, and R^2."""
    pred = tm.predict(np.asarray(x, float))
    if tm.kind in CLASSIFIER_KINDS:
        return classification_metrics(y, pred)
    return regression_metrics(y, pred)


__all__ = [
    "AdaBoostModel", "L2BoostModel", "Stump", "Tree",
    "train_adaboost", "train_l2boost",
    "FEATURESETS", "MAX_FEATURES", "FeatureConfig", "Standardizer",
    "build_features", "featurize", "moments", "peak_features",
    "ClassificationMetrics", "RegressionMetrics", "classification_metrics",
    "detection_at_false_alarm", "regression_metrics",
    "TrainedModel", "load_model", "model_from_json", "model_to_json",
    "save_model",
    "SvcModel", "SvrModel", "kernel_matrix", "svc_kkt_violation",
    "svr_kkt_violation", "train_svc", "train_svr",
    "CLASSIFIER_KINDS", "REGRESSOR_KINDS", "train_model", "evaluate",
]
