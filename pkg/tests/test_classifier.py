import math

import numpy as np
import pytest

from ctl.classifier import (
    ClassProbabilities,
    build_downstream,
    cross_entropy_loss,
    cross_validate,
    evaluate_entries,
    finetune,
    load_model,
    logit_gradient,
    misclassified_similarity,
    model_checkpoint,
    predict_patch,
    predict_patches,
)
from ctl.config import FinetuneConfig, LbpConfig
from ctl.const import INIT_CHECKPOINT
from ctl.data.imageio import read_pgm
from ctl.data.models import ClassLabel
from ctl.data.split import plan_splits
from ctl.data.store import TextureStore
from ctl.error_handler import CheckpointError, ConfigError, DataError, LossError
from ctl.nn.factory import NetworkFactory
from ctl.nn.layers import softmax


class TestCrossEntropy:

    def test_uniform_prediction(self):
        loss, _ = cross_entropy_loss(np.full((4, 5), 0.2), [0, 1, 2, 3])
        assert loss == pytest.approx(math.log(5))

    def test_one_hot_labels(self):
        p = np.array([[0.5, 0.2, 0.1, 0.1, 0.1]])
        assert (cross_entropy_loss(p, np.eye(5)[[0]])[0]
                == pytest.approx(cross_entropy_loss(p, [0])[0]))

    def test_gradient_through_softmax(self, rng):
        logits = rng.standard_normal((3, 5))
        labels = np.array([4, 0, 2])
        p = softmax(logits)
        _, grad_p = cross_entropy_loss(p, labels)
        # chain rule through the softmax Jacobian
        through = p * (grad_p - np.sum(grad_p * p, axis=1, keepdims=True))
        np.testing.assert_allclose(through, logit_gradient(p, labels), atol=1e-12)

    def test_floor_clamps_zero_probability(self, caplog):
        loss, _ = cross_entropy_loss(np.array([[1.0, 0.0, 0.0, 0.0, 0.0]]), [3])
        assert math.isfinite(loss)
        assert "Clamped" in caplog.text

    @pytest.mark.parametrize("labels", [[5], [-1], [[1, 0]]])
    def test_bad_labels(self, labels):
        with pytest.raises(LossError):
            cross_entropy_loss(np.full((1, 5), 0.2), labels)


class TestClassProbabilities:

    def test_risk_groups(self):
        probs = ClassProbabilities((0.1, 0.1, 0.1, 0.3, 0.4))
        assert probs.predicted_label is ClassLabel.CC
        assert probs.high_risk_prob == pytest.approx(0.7)
        assert probs.low_risk_prob == pytest.approx(0.3)
        assert probs.to_dict()["probabilities"]["HSIL"] == 0.3


class TestFinetune:

    def test_history_and_predictions(self, corpus, small_lbp, tiny_spec):
        store = TextureStore(corpus, small_lbp)
        network = build_downstream(0, spec=tiny_spec)
        entries = corpus.entries_for(corpus.patient_ids[::3])
        result = finetune(network, entries, store, FinetuneConfig(epochs=2, batch_size=8), 0)
        frame = result.history.to_frame()
        assert frame["epoch"].tolist() == [1, 2]
        assert set(frame.columns) == {"epoch", "loss", "accuracy"}
        evaluation = evaluate_entries(network, entries, store)
        np.testing.assert_allclose(evaluation.probabilities.sum(axis=1), 1.0, rtol=1e-5)
        assert 0.0 <= evaluation.accuracy <= 1.0

    def test_deterministic(self, corpus, small_lbp, tiny_spec):
        entries = corpus.entries_for(corpus.patient_ids[:5])
        runs = []
        for _ in range(2):
            network = build_downstream(1, spec=tiny_spec)
            finetune(network, entries, TextureStore(corpus, small_lbp),
                     FinetuneConfig(epochs=1, batch_size=8), 1)
            runs.append(network.state_dict())
        for name in runs[0]:
            np.testing.assert_array_equal(runs[0][name], runs[1][name])

    def test_frozen_encoder_is_untouched(self, corpus, small_lbp, tiny_spec):
        checkpoint = model_checkpoint(NetworkFactory.create_pretrain_network(2, tiny_spec), 2,
                                      small_lbp)
        network = build_downstream(2, checkpoint, freeze_encoder=True)
        before = network.state_dict()
        finetune(network, corpus.entries_for(corpus.patient_ids[:5]),
                 TextureStore(corpus, small_lbp), FinetuneConfig(epochs=1, batch_size=8), 2)
        after = network.state_dict()
        for name in before:
            if name.startswith("encoder."):
                np.testing.assert_array_equal(before[name], after[name])
        assert not np.array_equal(before["head.fc.weight"], after["head.fc.weight"])

    def test_empty_subset(self, corpus, small_lbp, tiny_spec):
        with pytest.raises(DataError):
            finetune(build_downstream(0, spec=tiny_spec), [], TextureStore(corpus, small_lbp),
                     FinetuneConfig(epochs=1), 0)


class TestModelFiles:

    def test_reload_gives_same_predictions(self, tmp_path, corpus, tiny_spec):
        lbp = LbpConfig(p=8, r=2.0)
        network = build_downstream(4, spec=tiny_spec)
        model_checkpoint(network, 4, lbp).save(tmp_path / "model.ckpt")
        loaded, loaded_lbp = load_model(tmp_path / "model.ckpt")
        assert loaded_lbp == lbp
        images = [read_pgm(corpus.resolve(e.image_path)) for e in corpus.entries[:3]]
        np.testing.assert_allclose(predict_patches(loaded, images, lbp),
                                   predict_patches(network, images, lbp), rtol=1e-6)
        single = predict_patch(loaded, images[0], lbp)
        assert sum(single.p) == pytest.approx(1.0, rel=1e-5)

    def test_pretrain_checkpoint_is_not_a_classifier(self, tmp_path, tiny_spec, small_lbp):
        network = NetworkFactory.create_pretrain_network(0, tiny_spec)
        model_checkpoint(network, 0, small_lbp).save(tmp_path / "p.ckpt")
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "p.ckpt")


class TestCrossValidation:

    def test_one_row_per_fold(self, corpus, small_lbp, tiny_spec):
        plan = plan_splits(corpus, 0.8, k=3, seed=0)
        checkpoint = model_checkpoint(NetworkFactory.create_pretrain_network(0, tiny_spec), 0,
                                      small_lbp)
        config = FinetuneConfig(epochs=1, batch_size=8, init=INIT_CHECKPOINT)
        result = cross_validate(corpus, plan, config, small_lbp, 0, checkpoint)
        assert len(result.folds) == 3
        assert set(result.folds[0]) == {"accuracy", "micro_f1", "auc", "sensitivity",
                                        "specificity"}
        assert result.summary["accuracy"]["n"] == 3

    def test_checkpoint_init_needs_checkpoint(self, corpus, small_lbp):
        plan = plan_splits(corpus, 0.8, k=3, seed=0)
        with pytest.raises(ConfigError):
            cross_validate(corpus, plan, FinetuneConfig(init=INIT_CHECKPOINT), small_lbp, 0)


class TestMisclassifiedSimilarity:

    def test_confused_against_reference(self, corpus, small_lbp):
        predictions = {}
        for entry in corpus.entries:
            if entry.label in (ClassLabel.EP, ClassLabel.HSIL):
                predictions[entry.uid] = ClassLabel.HSIL.index
        distribution = misclassified_similarity(corpus, predictions, "EP", "HSIL", small_lbp)
        assert distribution.values.size == 18 * 18
        assert np.all((distribution.values >= 0) & (distribution.values <= 1 + 1e-12))

    def test_same_label(self, corpus, small_lbp):
        with pytest.raises(DataError):
            misclassified_similarity(corpus, {}, "EP", "EP", small_lbp)

    def test_nothing_confused(self, corpus, small_lbp):
        with pytest.raises(DataError):
            misclassified_similarity(corpus, {}, "EP", "HSIL", small_lbp)
