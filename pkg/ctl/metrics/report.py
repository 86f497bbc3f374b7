"""Run-level evaluation reports, fold summaries and paired run comparison."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..const import (
    CLASS_INDEX_MAP,
    CLASS_NAMES,
    DEFAULT_BINARY_THRESHOLD,
    DEFAULT_CONFIDENCE,
    HIGH_RISK_INDICES,
    NUM_CLASSES,
    TASK_BINARY,
    TASK_FIVE_CLASS,
)
from ..error_handler import MetricError, StatisticsError
from .binary import PROPORTIONS, ConfusionCounts, binary_metrics
from .multiclass import micro_f1, multiclass_accuracy, multiclass_counts
from .roc import auc
from .stats import WilcoxonResult, clopper_pearson, wilcoxon_signed_rank

_LOGGER = logging.getLogger(__name__)

SAMPLE_ID = "sample_id"
LABEL = "label"
SCORE = "score"
FOLD = "fold"


@dataclass
class RunReport:
    """Metric bundle of one evaluated run; None marks an undefined metric."""
    task: str
    sample_count: int
    metrics: Dict[str, Optional[float]]
    intervals: Dict[str, Optional[Tuple[float, float]]] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "n": self.sample_count,
            "metrics": dict(self.metrics),
            "confidence_intervals": {
                k: None if v is None else [v[0], v[1]] for k, v in self.intervals.items()
            },
            **self.details,
        }


def high_risk_scores(probabilities: np.ndarray) -> np.ndarray:
    """Summed high-risk class probability per row."""
    return np.asarray(probabilities, dtype=np.float64)[:, list(HIGH_RISK_INDICES)].sum(axis=1)


def _interval(successes: int, trials: int, confidence: float):
    return clopper_pearson(successes, trials, confidence) if trials > 0 else None


def _five_class_report(probabilities: np.ndarray, truths: np.ndarray,
                       confidence: float) -> RunReport:
    predicted = probabilities.argmax(axis=1)
    counts = multiclass_counts(truths, predicted)
    correct = int(np.trace(counts))
    return RunReport(
        task=TASK_FIVE_CLASS,
        sample_count=len(truths),
        metrics={"accuracy": multiclass_accuracy(counts), "micro_f1": micro_f1(counts)},
        intervals={"accuracy": _interval(correct, len(truths), confidence)},
        details={"classes": list(CLASS_NAMES), "confusion_matrix": counts.tolist()},
    )


def _binary_report(scores: np.ndarray, truths: np.ndarray, threshold: float,
                   confidence: float) -> RunReport:
    counts = ConfusionCounts.from_predictions((scores >= threshold).astype(np.int64), truths)
    metrics = binary_metrics(counts)
    try:
        metrics["auc"] = auc(scores, truths)
    except MetricError:
        metrics["auc"] = None
    intervals = {
        name: _interval(*proportion(counts), confidence)
        for name, proportion in PROPORTIONS.items()
    }
    return RunReport(
        task=TASK_BINARY,
        sample_count=len(truths),
        metrics=metrics,
        intervals=intervals,
        details={"threshold": threshold, "counts": counts.to_dict()},
    )


def evaluate_run(probabilities, truths, task: str = TASK_FIVE_CLASS,
                 threshold: float = DEFAULT_BINARY_THRESHOLD,
                 confidence: float = DEFAULT_CONFIDENCE) -> RunReport:
    """Metric bundle with exact confidence intervals for every proportion.

    ``probabilities`` is (N, 5) with ``truths`` as class indices. For the binary task
    a 1-D score vector with 0/1 ``truths`` is also accepted; five-class input is
    reduced to high-risk scores.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.int64)
    if len(probabilities) != len(truths):
        raise MetricError(f"{len(probabilities)} predictions for {len(truths)} truths")
    if len(truths) == 0:
        raise MetricError("Cannot evaluate an empty run")
    if task == TASK_FIVE_CLASS:
        if probabilities.ndim != 2 or probabilities.shape[1] != NUM_CLASSES:
            raise MetricError(f"Five-class evaluation needs (N, {NUM_CLASSES}) probabilities")
        return _five_class_report(probabilities, truths, confidence)
    if task == TASK_BINARY:
        if probabilities.ndim == 2:
            scores = high_risk_scores(probabilities)
            truths = np.isin(truths, HIGH_RISK_INDICES).astype(np.int64)
        else:
            scores = probabilities
            if np.any((truths != 0) & (truths != 1)):
                raise MetricError("Binary truths must be 0 or 1")
        return _binary_report(scores, truths, threshold, confidence)
    raise MetricError(f"Unknown task {task!r}")


def summarize_folds(
    folds: Sequence[Union[RunReport, Mapping[str, Optional[float]]]],
) -> Dict[str, Dict[str, Optional[float]]]:
    """Mean and sample (n - 1) standard deviation per metric; undefined values skipped."""
    rows = [f.metrics if isinstance(f, RunReport) else f for f in folds]
    names: List[str] = []
    for row in rows:
        names.extend(k for k in row if k not in names and k != FOLD)
    summary = {}
    for name in names:
        values = np.array([row[name] for row in rows if row.get(name) is not None],
                          dtype=np.float64)
        summary[name] = {
            "mean": float(values.mean()) if values.size else None,
            "std": float(values.std(ddof=1)) if values.size > 1 else None,
            "n": int(values.size),
        }
    return summary


def compare_runs(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Paired signed-rank test of per-fold metric values a - b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise StatisticsError(f"Paired runs differ in length: {a.size} vs {b.size}")
    return wilcoxon_signed_rank(a - b)


def write_fold_table(folds: Sequence[Union[RunReport, Mapping[str, Optional[float]]]],
                     path: Path) -> None:
    rows = [f.metrics if isinstance(f, RunReport) else f for f in folds]
    frame = pd.DataFrame([{FOLD: i, **row} for i, row in enumerate(rows)])
    frame.to_csv(path, index=False)


def read_fold_table(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MetricError(f"Cannot read fold table {path}: {e}") from e


def write_predictions_csv(sample_ids: Sequence[str], probabilities: np.ndarray,
                          path: Path) -> None:
    """One row per sample: id plus the five class probabilities."""
    frame = pd.DataFrame(np.asarray(probabilities, dtype=np.float64), columns=list(CLASS_NAMES))
    frame.insert(0, SAMPLE_ID, list(sample_ids))
    frame.to_csv(path, index=False, float_format="%.9g")


def write_truth_csv(sample_ids: Sequence[str], labels: Sequence[str], path: Path) -> None:
    pd.DataFrame({SAMPLE_ID: list(sample_ids), LABEL: list(labels)}).to_csv(path, index=False)


def _read_csv(path: Path, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype={SAMPLE_ID: str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MetricError(f"Cannot read {path}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MetricError(f"{path} lacks columns {missing}")
    if frame[SAMPLE_ID].duplicated().any():
        raise MetricError(f"{path} repeats sample ids")
    return frame


def read_predictions_csv(path: Path) -> Tuple[List[str], np.ndarray]:
    """Sample ids with (N, 5) probabilities, or (N,) scores from a ``score`` column."""
    frame = _read_csv(path, [SAMPLE_ID])
    if all(name in frame.columns for name in CLASS_NAMES):
        values = frame[list(CLASS_NAMES)].to_numpy(dtype=np.float64)
    elif SCORE in frame.columns:
        values = frame[SCORE].to_numpy(dtype=np.float64)
    else:
        raise MetricError(f"{path} needs the five class columns or a {SCORE!r} column")
    return frame[SAMPLE_ID].tolist(), values


def read_truth_csv(path: Path) -> Dict[str, int]:
    """Sample id to class index; 0/1 labels are kept as binary truths."""
    frame = _read_csv(path, [SAMPLE_ID, LABEL])
    truths = {}
    for sample_id, label in zip(frame[SAMPLE_ID], frame[LABEL].astype(str)):
        if label in CLASS_INDEX_MAP:
            truths[sample_id] = CLASS_INDEX_MAP[label]
        elif label in ("0", "1"):
            truths[sample_id] = int(label)
        else:
            raise MetricError(f"Unknown label {label!r} for sample {sample_id}")
    return truths


def align(sample_ids: Sequence[str], truths: Mapping[str, int]) -> np.ndarray:
    """Truth values in prediction order; every prediction needs a truth."""
    missing = [s for s in sample_ids if s not in truths]
    if missing or len(truths) != len(sample_ids):
        raise MetricError(
            f"Predictions and truths disagree on samples ({len(missing)} without truth, "
            f"{len(truths)} truths for {len(sample_ids)} predictions)"
        )
    return np.array([truths[s] for s in sample_ids], dtype=np.int64)
