"""Fine-tuning, evaluation and cross-validation of the downstream classifier."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config import FinetuneConfig, LbpConfig
from ..const import INIT_CHECKPOINT, TASK_BINARY, TASK_FIVE_CLASS
from ..data.models import ClassLabel, DatasetManifest, ManifestEntry, SplitPlan
from ..data.split import oversample, subsample_label_fraction
from ..data.store import TextureSource, TextureStore
from ..error_handler import ConfigError, DataError
from ..metrics.report import (
    RunReport,
    evaluate_run,
    summarize_folds,
    write_predictions_csv,
    write_truth_csv,
)
from ..nn.checkpoint import ModelCheckpoint
from ..nn.network import Network
from ..nn.optim import Optimizer, OptimizerState, create_optimizer
from ..nn.trainer import BaseTrainer, TrainingHistory
from .loss import cross_entropy_loss
from .model import build_downstream, predict_maps

_LOGGER = logging.getLogger(__name__)


class ClassifierTrainer(BaseTrainer):
    """Minimizes cross-entropy of the softmax head with SGD momentum."""

    stream_name = "finetune"
    loss_name = "loss"

    def __init__(self, network: Network, optimizer: Optimizer, textures: np.ndarray,
                 labels: np.ndarray, config: FinetuneConfig, seed: int):
        super().__init__(network, optimizer, config.batch_size, seed, drop_last=False)
        self.textures = textures
        self.labels = labels

    @property
    def sample_count(self) -> int:
        return len(self.textures)

    def train_batch(self, indices: np.ndarray, epoch: int) -> Dict[str, float]:
        probabilities = self.network.forward(self.textures[indices], training=True)
        labels = self.labels[indices]
        loss, grad = cross_entropy_loss(probabilities, labels)
        self.network.backward(grad)
        self.step()
        accuracy = float(np.mean(probabilities.argmax(axis=1) == labels))
        return {self.loss_name: loss, "accuracy": accuracy}


@dataclass
class FinetuneResult:
    network: Network
    history: TrainingHistory
    entries: List[ManifestEntry]
    optimizer: OptimizerState


def finetune(network: Network, entries: Sequence[ManifestEntry], store: TextureSource,
             config: FinetuneConfig, seed: int) -> FinetuneResult:
    """Train on a patient-grouped label fraction of ``entries``, classes oversampled."""
    config.validate()
    if not entries:
        raise DataError("Fine-tuning needs a non-empty labeled subset")
    subset = subsample_label_fraction(entries, config.label_fraction, seed)
    training = oversample(subset)
    textures = store.get_maps(training)
    labels = np.array([e.label.index for e in training], dtype=np.int64)
    state = OptimizerState.sgd_momentum(config.learning_rate, config.momentum,
                                        config.weight_decay)
    trainer = ClassifierTrainer(network, create_optimizer(state), textures, labels, config,
                                seed)
    _LOGGER.info("Fine-tuning on %s patches (%s before oversampling, fraction %s) "
                 "for %s epochs%s", len(training), len(subset), config.label_fraction,
                 config.epochs, ", encoder frozen" if network.freeze_encoder else "")
    history = trainer.fit(config.epochs)
    return FinetuneResult(network, history, subset, state)


@dataclass
class EvaluationResult:
    """Inference-mode probabilities of evaluated patches with their truths."""
    sample_ids: List[str]
    probabilities: np.ndarray
    truths: np.ndarray

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.probabilities.argmax(axis=1) == self.truths))

    def report(self, task: str = TASK_FIVE_CLASS, **kwargs) -> RunReport:
        return evaluate_run(self.probabilities, self.truths, task, **kwargs)

    def fold_metrics(self) -> Dict[str, Optional[float]]:
        """Five-class accuracy and micro-F1 with binary AUC, sensitivity and specificity."""
        five = self.report(TASK_FIVE_CLASS).metrics
        binary = self.report(TASK_BINARY).metrics
        return {
            "accuracy": five["accuracy"],
            "micro_f1": five["micro_f1"],
            "auc": binary["auc"],
            "sensitivity": binary["sensitivity"],
            "specificity": binary["specificity"],
        }

    def write(self, predictions: Path, truths: Optional[Path] = None) -> None:
        write_predictions_csv(self.sample_ids, self.probabilities, predictions)
        if truths is not None:
            labels = [ClassLabel.from_index(int(t)).value for t in self.truths]
            write_truth_csv(self.sample_ids, labels, truths)


def evaluate_entries(network: Network, entries: Sequence[ManifestEntry],
                     store: TextureSource) -> EvaluationResult:
    if not entries:
        raise DataError("No entries to evaluate")
    probabilities = predict_maps(network, store.get_maps(entries))
    truths = np.array([e.label.index for e in entries], dtype=np.int64)
    return EvaluationResult([e.uid for e in entries], probabilities, truths)


@dataclass
class CrossValidationResult:
    folds: List[Dict[str, Optional[float]]] = field(default_factory=list)

    @property
    def summary(self) -> Dict[str, Dict[str, Optional[float]]]:
        return summarize_folds(self.folds)

    def to_dict(self) -> Dict:
        return {"folds": self.folds, "summary": self.summary}


def cross_validate(manifest: DatasetManifest, plan: SplitPlan, config: FinetuneConfig,
                   lbp_config: LbpConfig, seed: int,
                   checkpoint: Optional[ModelCheckpoint] = None,
                   store: Optional[TextureSource] = None, jobs: int = 1) -> CrossValidationResult:
    """Fine-tune and validate once per fold of the training patients."""
    if not plan.folds:
        raise DataError("The split plan has no cross-validation folds")
    if config.init == INIT_CHECKPOINT and checkpoint is None:
        raise ConfigError("Checkpoint initialization requested without a checkpoint")
    store = store or TextureStore(manifest, lbp_config, jobs)
    result = CrossValidationResult()
    for index, (train_ids, validation_ids) in enumerate(plan.folds):
        network = build_downstream(
            seed, checkpoint if config.init == INIT_CHECKPOINT else None,
            config.freeze_encoder,
        )
        finetune(network, manifest.entries_for(train_ids), store, config, seed)
        metrics = evaluate_entries(network, manifest.entries_for(validation_ids),
                                   store).fold_metrics()
        _LOGGER.info("Fold %s/%s: accuracy %.4f", index + 1, len(plan.folds),
                     metrics["accuracy"])
        result.folds.append(metrics)
    return result
