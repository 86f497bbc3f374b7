import numpy as np
import pytest

from ctl.const import TASK_BINARY, TASK_FIVE_CLASS
from ctl.error_handler import MetricError, StatisticsError
from ctl.metrics.binary import ConfusionCounts, binary_metrics, f1_score
from ctl.metrics.multiclass import micro_f1, multiclass_accuracy, multiclass_counts
from ctl.metrics.report import (
    align,
    compare_runs,
    evaluate_run,
    high_risk_scores,
    read_fold_table,
    read_predictions_csv,
    read_truth_csv,
    summarize_folds,
    write_fold_table,
    write_predictions_csv,
    write_truth_csv,
)
from ctl.metrics.roc import auc, roc_curve


def pair_count_auc(scores, truths):
    """Probability a positive outscores a negative, ties counting one half."""
    positives = [s for s, t in zip(scores, truths) if t == 1]
    negatives = [s for s, t in zip(scores, truths) if t == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in positives for n in negatives)
    return wins / (len(positives) * len(negatives))


class TestBinaryMetrics:

    def test_counts_from_predictions(self):
        counts = ConfusionCounts.from_predictions([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
        assert counts == ConfusionCounts(tp=2, fp=1, tn=1, fn=1)

    def test_metric_values(self):
        metrics = binary_metrics(ConfusionCounts(tp=8, fp=2, tn=6, fn=4))
        assert metrics["accuracy"] == pytest.approx(0.7)
        assert metrics["sensitivity"] == pytest.approx(8 / 12)
        assert metrics["specificity"] == pytest.approx(0.75)
        assert metrics["ppv"] == pytest.approx(0.8)
        assert metrics["npv"] == pytest.approx(0.6)
        assert metrics["f1"] == pytest.approx(2 * 0.8 * (8 / 12) / (0.8 + 8 / 12))

    def test_undefined_metrics_are_none(self):
        metrics = binary_metrics(ConfusionCounts(tp=0, fp=0, tn=5, fn=0))
        assert metrics["sensitivity"] is None
        assert metrics["ppv"] is None
        assert metrics["f1"] is None
        assert metrics["specificity"] == 1.0

    def test_f1_with_zero_terms(self):
        assert f1_score(0.0, 0.0) is None

    def test_negative_count(self):
        with pytest.raises(MetricError):
            ConfusionCounts(tp=-1, fp=0, tn=0, fn=0)


class TestMulticlass:

    def test_accuracy_and_micro_f1(self):
        counts = multiclass_counts([0, 1, 2, 3, 4, 4], [0, 1, 2, 3, 4, 0])
        assert counts.shape == (5, 5)
        assert multiclass_accuracy(counts) == pytest.approx(5 / 6)
        assert micro_f1(counts) == pytest.approx(5 / 6)

    def test_micro_f1_without_hits(self):
        assert micro_f1([[0, 3], [2, 0]]) == 0.0

    @pytest.mark.parametrize("counts", [[[1, 2, 3]], [[0, 0], [0, 0]], [[1, -1], [0, 1]]])
    def test_invalid_matrices(self, counts):
        with pytest.raises(MetricError):
            micro_f1(counts)


class TestRoc:

    def test_matches_pair_counting(self, rng):
        scores = np.round(rng.random(40), 1)
        truths = (rng.random(40) < 0.4).astype(int)
        truths[:2] = [0, 1]
        assert auc(scores, truths) == pytest.approx(pair_count_auc(scores, truths))

    def test_perfect_and_inverted(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_curve_endpoints(self):
        curve = roc_curve([0.3, 0.3, 0.6, 0.1], [0, 1, 1, 0])
        assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
        assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
        assert np.all(np.diff(curve.fpr) >= 0)

    def test_single_class(self):
        with pytest.raises(MetricError):
            auc([0.1, 0.4], [1, 1])


class TestRunReport:

    def probabilities(self):
        return np.array([
            [0.7, 0.1, 0.1, 0.05, 0.05],
            [0.1, 0.6, 0.1, 0.1, 0.1],
            [0.1, 0.1, 0.2, 0.3, 0.3],
            [0.0, 0.0, 0.1, 0.8, 0.1],
        ])

    def test_five_class(self):
        report = evaluate_run(self.probabilities(), [0, 1, 2, 4], TASK_FIVE_CLASS)
        assert report.metrics["accuracy"] == pytest.approx(0.5)
        assert report.details["confusion_matrix"][2][3] == 1
        lower, upper = report.intervals["accuracy"]
        assert lower < 0.5 < upper

    def test_binary_from_probabilities(self):
        report = evaluate_run(self.probabilities(), [0, 1, 2, 4], TASK_BINARY)
        np.testing.assert_allclose(high_risk_scores(self.probabilities()),
                                   [0.1, 0.2, 0.6, 0.9])
        assert report.details["counts"] == {"TP": 1, "FP": 1, "TN": 2, "FN": 0}
        assert report.metrics["auc"] == 1.0
        assert report.intervals["sensitivity"] == (pytest.approx(0.025), 1.0)

    def test_binary_single_class_has_no_auc(self):
        report = evaluate_run(np.array([0.2, 0.7]), [0, 0], TASK_BINARY)
        assert report.metrics["auc"] is None
        assert report.metrics["sensitivity"] is None
        assert report.intervals["sensitivity"] is None

    def test_mismatched_lengths(self):
        with pytest.raises(MetricError):
            evaluate_run(self.probabilities(), [0, 1], TASK_FIVE_CLASS)

    def test_unknown_task(self):
        with pytest.raises(MetricError):
            evaluate_run(self.probabilities(), [0, 1, 2, 4], "ternary")

    def test_serializable(self):
        data = evaluate_run(self.probabilities(), [0, 1, 2, 4], TASK_BINARY).to_dict()
        assert data["n"] == 4
        assert isinstance(data["confidence_intervals"]["accuracy"], list)


class TestFolds:

    def test_summary(self):
        summary = summarize_folds([{"accuracy": 0.8, "auc": None}, {"accuracy": 0.9, "auc": 0.7}])
        assert summary["accuracy"]["mean"] == pytest.approx(0.85)
        assert summary["accuracy"]["std"] == pytest.approx(0.0707107, abs=1e-6)
        assert summary["auc"] == {"mean": 0.7, "std": None, "n": 1}

    def test_table_round_trip(self, tmp_path):
        write_fold_table([{"accuracy": 0.8}, {"accuracy": 0.9}], tmp_path / "folds.csv")
        frame = read_fold_table(tmp_path / "folds.csv")
        assert frame["fold"].tolist() == [0, 1]
        assert frame["accuracy"].tolist() == [0.8, 0.9]

    def test_compare_runs(self):
        result = compare_runs([0.9, 0.8, 0.85, 0.95, 0.7], [0.8, 0.7, 0.8, 0.9, 0.6])
        assert result.p_value == pytest.approx(0.0625)

    def test_compare_unequal_lengths(self):
        with pytest.raises(StatisticsError):
            compare_runs([0.1, 0.2], [0.1])


class TestCsvFiles:

    def test_predictions_and_truths(self, tmp_path):
        probabilities = np.full((2, 5), 0.2)
        write_predictions_csv(["a", "b"], probabilities, tmp_path / "p.csv")
        write_truth_csv(["b", "a"], ["CC", "MI"], tmp_path / "t.csv")
        ids, values = read_predictions_csv(tmp_path / "p.csv")
        truths = align(ids, read_truth_csv(tmp_path / "t.csv"))
        assert ids == ["a", "b"]
        np.testing.assert_allclose(values, probabilities)
        np.testing.assert_array_equal(truths, [0, 4])

    def test_score_column(self, tmp_path):
        (tmp_path / "s.csv").write_text("sample_id,score\n001,0.4\n002,0.9\n")
        ids, values = read_predictions_csv(tmp_path / "s.csv")
        assert ids == ["001", "002"]
        np.testing.assert_allclose(values, [0.4, 0.9])

    def test_binary_truth_labels(self, tmp_path):
        (tmp_path / "t.csv").write_text("sample_id,label\nx,1\ny,0\n")
        assert read_truth_csv(tmp_path / "t.csv") == {"x": 1, "y": 0}

    def test_unknown_label(self, tmp_path):
        (tmp_path / "t.csv").write_text("sample_id,label\nx,XX\n")
        with pytest.raises(MetricError):
            read_truth_csv(tmp_path / "t.csv")

    def test_missing_truth(self):
        with pytest.raises(MetricError):
            align(["a", "b"], {"a": 0})

    def test_duplicate_ids(self, tmp_path):
        (tmp_path / "s.csv").write_text("sample_id,score\na,0.4\na,0.9\n")
        with pytest.raises(MetricError):
            read_predictions_csv(tmp_path / "s.csv")
