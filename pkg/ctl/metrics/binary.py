"""Binary confusion counts and the metrics derived from them."""
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from ..error_handler import MetricError


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary outcome counts, positive class = high risk."""
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name, value in asdict(self).items():
            if int(value) != value or value < 0:
                raise MetricError(f"Count {name} must be a non-negative integer, got {value}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predicted: Sequence[int], truth: Sequence[int]) -> "ConfusionCounts":
        predicted = np.asarray(predicted, dtype=np.int64)
        truth = np.asarray(truth, dtype=np.int64)
        if predicted.shape != truth.shape:
            raise MetricError(
                f"{len(predicted)} predictions for {len(truth)} ground-truth labels"
            )
        if predicted.size == 0:
            return cls(0, 0, 0, 0)
        tn, fp, fn, tp = confusion_matrix(truth, predicted, labels=[0, 1]).ravel()
        return cls(int(tp), int(fp), int(tn), int(fn))

    def to_dict(self) -> Dict[str, int]:
        return {"TP": self.tp, "FP": self.fp, "TN": self.tn, "FN": self.fn}


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator > 0 else None


def f1_score(ppv: Optional[float], sensitivity: Optional[float]) -> Optional[float]:
    """Harmonic mean of PPV and sensitivity; undefined if either is or both are zero."""
    if ppv is None or sensitivity is None or ppv + sensitivity == 0:
        return None
    return 2.0 * ppv * sensitivity / (ppv + sensitivity)


def binary_metrics(counts: ConfusionCounts) -> Dict[str, Optional[float]]:
    """Accuracy, sensitivity, specificity, PPV, NPV and F1.

    A metric whose denominator is zero is None.
    """
    sensitivity = _ratio(counts.tp, counts.tp + counts.fn)
    ppv = _ratio(counts.tp, counts.tp + counts.fp)
    return {
        "accuracy": _ratio(counts.tp + counts.tn, counts.total),
        "sensitivity": sensitivity,
        "specificity": _ratio(counts.tn, counts.tn + counts.fp),
        "ppv": ppv,
        "npv": _ratio(counts.tn, counts.tn + counts.fn),
        "f1": f1_score(ppv, sensitivity),
    }


# (successes, trials) behind every proportion metric
PROPORTIONS = {
    "accuracy": lambda c: (c.tp + c.tn, c.total),
    "sensitivity": lambda c: (c.tp, c.tp + c.fn),
    "specificity": lambda c: (c.tn, c.tn + c.fp),
    "ppv": lambda c: (c.tp, c.tp + c.fp),
    "npv": lambda c: (c.tn, c.tn + c.fn),
}
