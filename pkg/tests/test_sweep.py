import pytest

from ctl.config import FinetuneConfig, LbpConfig, PretrainConfig
from ctl.const import INIT_CHECKPOINT, INIT_RANDOM
from ctl.data.models import DatasetManifest
from ctl.data.split import split_by_patient
from ctl.error_handler import SweepError
from ctl.pretrain.trainer import pretrain
from ctl.sweep.harness import (
    ROW_RUN,
    ROW_SUMMARY,
    STATUS_FAILED,
    STATUS_OK,
    label_fraction_study,
    lbp_sweep,
)


class TestLbpSweep:

    def test_invalid_cell_is_reported(self, corpus, tmp_path):
        result = lbp_sweep(corpus, r_values=[1.0], p_values=[2], epochs=1)
        assert len(result.rows) == 1
        assert result.rows[0]["status"] == STATUS_FAILED
        assert result.failed == result.rows
        result.write_csv(tmp_path / "sweep.csv")
        assert (tmp_path / "sweep.csv").read_text().startswith("r,p,seeds,status")

    def test_empty_grid(self, corpus):
        with pytest.raises(SweepError):
            lbp_sweep(corpus, r_values=[], p_values=[8])

    @pytest.mark.slow
    def test_grid_rows_in_order(self, corpus):
        result = lbp_sweep(
            corpus, r_values=[1.0, 2.0], p_values=[8], epochs=1,
            pretrain_config=PretrainConfig(batch_size=8),
            finetune_config=FinetuneConfig(epochs=1, batch_size=8),
        )
        assert [(row["r"], row["p"]) for row in result.rows] == [(1.0, 8), (2.0, 8)]
        assert all(row["status"] == STATUS_OK for row in result.rows)
        assert all(0.0 <= row["accuracy_mean"] <= 1.0 for row in result.rows)
        assert result.rows[0]["accuracy_std"] is None


class TestLabelFractionStudy:

    def test_checkpoint_arm_needs_checkpoint(self, corpus):
        with pytest.raises(SweepError):
            label_fraction_study(corpus, None, inits=(INIT_RANDOM, INIT_CHECKPOINT))

    def test_empty_fractions(self, corpus):
        with pytest.raises(SweepError):
            label_fraction_study(corpus, None, fractions=[], inits=(INIT_RANDOM,))

    @pytest.mark.slow
    def test_run_and_summary_rows(self, corpus):
        result = label_fraction_study(
            corpus, None, fractions=[0.5, 1.0], seeds=[0, 1], inits=(INIT_RANDOM,),
            finetune_config=FinetuneConfig(epochs=1, batch_size=8),
        )
        frame = result.to_frame()
        assert frame["row"].tolist() == [ROW_RUN, ROW_RUN, ROW_SUMMARY] * 2
        summary = frame[frame["row"] == ROW_SUMMARY]
        assert summary["fraction"].tolist() == [0.5, 1.0]
        assert (summary["status"] == STATUS_OK).all()


@pytest.mark.slow
def test_pretrained_init_helps_with_few_labels(default_corpus_dir):
    manifest = DatasetManifest.load(default_corpus_dir / "manifest.json")
    train_ids = split_by_patient(manifest, seed=0).train_patient_ids
    checkpoint = pretrain(manifest, PretrainConfig(epochs=10), LbpConfig(), 0,
                          patient_ids=train_ids).checkpoint
    result = label_fraction_study(manifest, checkpoint, fractions=[0.25], seeds=[0, 1, 2])
    summary = {row["init"]: row for row in result.rows if row["row"] == ROW_SUMMARY}
    assert summary[INIT_CHECKPOINT]["status"] == STATUS_OK
    assert summary[INIT_CHECKPOINT]["accuracy"] >= summary[INIT_RANDOM]["accuracy"]
