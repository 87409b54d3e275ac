"""Evaluation metrics: detection/false-alarm rates for +-1 classifiers,
fitted-line statistics for regressors, and threshold sweeps at a pinned
false-alarm budget."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClassificationMetrics:
    detection_rate: float    # P(predict +1 | label +1)
    false_alarm_rate: float  # P(predict +1 | label -1)


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    slope: float       # least-squares line of predicted vs actual
    intercept: float
    r2: float


def classification_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> ClassificationMetrics:
    y_true = np.asarray(y_true, float)
    y_pred = np.asarray(y_pred, float)
    pos = y_true > 0
    neg = ~pos
    det = float(np.mean(y_pred[pos] > 0)) if pos.any() else float("nan")
    fa = float(np.mean(y_pred[neg] > 0)) if neg.any() else float("nan")
    return ClassificationMetrics(detection_rate=det, false_alarm_rate=fa)


def regression_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> RegressionMetrics:
    y_true = np.asarray(y_true, float)
    y_pred = np.asarray(y_pred, float)
    mse = float(np.mean((y_pred - y_true) ** 2))
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    if sst > 0:
        slope, intercept = np.polyfit(y_true, y_pred, 1)
        r2 = 1.0 - float(np.sum((y_pred - y_true) ** 2)) / sst
    else:
        slope, intercept = 0.0, float(y_pred.mean())
        r2 = float("nan")
    return RegressionMetrics(mse=mse, slope=float(slope),
                             intercept=float(intercept), r2=float(r2))


def detection_at_false_alarm(pos_scores: np.ndarray, neg_scores: np.ndarray,
                             fa_rate: float) -> float:
    """Detection rate at the lowest threshold whose strictly-greater rule
    keeps the false-alarm rate at or under ``fa_rate``."""
    pos = np.sort(np.asarray(pos_scores, float))
    neg = np.sort(np.asarray(neg_scores, float))[::-1]
    if len(neg) == 0 or len(pos) == 0:
        raise ValueError("need scores for both classes")
    allowed = int(np.floor(fa_rate * len(neg)))
    if allowed >= len(neg):
        return 1.0
    threshold = neg[allowed]
    return float(np.mean(pos > threshold))
