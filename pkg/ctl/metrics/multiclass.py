"""Multiclass confusion matrices, accuracy and micro-F1."""
from fractions import Fraction
from typing import Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from ..const import NUM_CLASSES
from ..error_handler import MetricError


def multiclass_counts(truth: Sequence[int], predicted: Sequence[int],
                      num_classes: int = NUM_CLASSES) -> np.ndarray:
    """K x K counts, rows = truth, columns = prediction."""
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape:
        raise MetricError(f"{len(predicted)} predictions for {len(truth)} ground-truth labels")
    if truth.size == 0:
        return np.zeros((num_classes, num_classes), dtype=np.int64)
    return confusion_matrix(truth, predicted, labels=list(range(num_classes))).astype(np.int64)


def _validated(counts) -> np.ndarray:
    matrix = np.asarray(counts)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise MetricError(f"Confusion matrix must be square and non-empty, got {matrix.shape}")
    if np.any(matrix < 0) or np.any(matrix != np.round(matrix)):
        raise MetricError("Confusion counts must be non-negative integers")
    matrix = matrix.astype(np.int64)
    if matrix.sum() == 0:
        raise MetricError("Confusion matrix holds no samples")
    return matrix


def multiclass_accuracy(counts) -> float:
    matrix = _validated(counts)
    return float(Fraction(int(np.trace(matrix)), int(matrix.sum())))


def micro_f1(counts) -> float:
    """F1 of pooled per-class TP, FP and FN, evaluated in exact rationals."""
    matrix = _validated(counts)
    tp = int(np.trace(matrix))
    fp = int(matrix.sum(axis=0).sum()) - tp
    fn = int(matrix.sum(axis=1).sum()) - tp
    if tp == 0:
        return 0.0
    precision = Fraction(tp, tp + fp)
    recall = Fraction(tp, tp + fn)
    return float(2 * precision * recall / (precision + recall))
