"""ROC staircase and area under it."""
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn import metrics as skmetrics

from ..error_handler import MetricError


@dataclass
class RocCurve:
    """(FPR, TPR) points from (0, 0) to (1, 1), tied scores crossed together."""
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def area(self) -> float:
        return float(skmetrics.auc(self.fpr, self.tpr))


def _inputs(scores: Sequence[float], truths: Sequence[int]):
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64)
    if scores.shape != truths.shape or scores.ndim != 1:
        raise MetricError(f"{scores.shape} scores for {truths.shape} ground-truth labels")
    positives = int(truths.sum())
    if positives == 0 or positives == truths.size:
        raise MetricError("AUC needs at least one positive and one negative sample")
    return scores, truths


def roc_curve(scores: Sequence[float], truths: Sequence[int]) -> RocCurve:
    scores, truths = _inputs(scores, truths)
    fpr, tpr, thresholds = skmetrics.roc_curve(truths, scores, drop_intermediate=False)
    return RocCurve(fpr, tpr, thresholds)


def auc(scores: Sequence[float], truths: Sequence[int]) -> float:
    """Trapezoidal area under the ROC staircase, in [0, 1]."""
    return roc_curve(scores, truths).area
