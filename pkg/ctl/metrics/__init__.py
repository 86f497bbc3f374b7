"""Evaluation metrics and statistics."""
from .binary import ConfusionCounts, binary_metrics, f1_score
from .multiclass import micro_f1, multiclass_accuracy, multiclass_counts
from .report import (
    RunReport,
    compare_runs,
    evaluate_run,
    high_risk_scores,
    read_predictions_csv,
    read_truth_csv,
    summarize_folds,
    write_predictions_csv,
    write_truth_csv,
)
from .roc import RocCurve, auc, roc_curve
from .stats import WilcoxonResult, clopper_pearson, wilcoxon_signed_rank

__all__ = [
    "ConfusionCounts",
    "RocCurve",
    "RunReport",
    "WilcoxonResult",
    "auc",
    "binary_metrics",
    "clopper_pearson",
    "compare_runs",
    "evaluate_run",
    "f1_score",
    "high_risk_scores",
    "micro_f1",
    "multiclass_accuracy",
    "multiclass_counts",
    "read_predictions_csv",
    "read_truth_csv",
    "roc_curve",
    "summarize_folds",
    "wilcoxon_signed_rank",
    "write_predictions_csv",
    "write_truth_csv",
]
