"""Contrastive pretraining of the encoder and projection head."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np

from ..config import LbpConfig, PretrainConfig
from ..const import CHECKPOINT_ROLE_PRETRAIN
from ..data.models import DatasetManifest
from ..data.store import TextureSource, TextureStore
from ..error_handler import DataError
from ..nn.checkpoint import ModelCheckpoint
from ..nn.factory import NetworkFactory
from ..nn.network import Network, NetworkSpec
from ..nn.optim import Optimizer, OptimizerState, create_optimizer
from ..nn.trainer import BaseTrainer, TrainingHistory
from .augment import contrastive_views
from .loss import batch_loss_and_grad

_LOGGER = logging.getLogger(__name__)

PSI_COLUMN = "mean_psi"


class ContrastiveTrainer(BaseTrainer):
    """Minimizes the mean contrastive loss over augmented view pairs."""

    stream_name = "pretrain"
    loss_name = PSI_COLUMN

    def __init__(self, network: Network, optimizer: Optimizer, textures: np.ndarray,
                 config: PretrainConfig, seed: int):
        super().__init__(network, optimizer, config.batch_size, seed, drop_last=True)
        self.textures = textures
        self.config = config

    @property
    def sample_count(self) -> int:
        return len(self.textures)

    def train_batch(self, indices: np.ndarray, epoch: int) -> Dict[str, float]:
        views = contrastive_views(self.textures[indices], indices, self.seed, epoch,
                                  self.config.augment)
        embeddings = self.network.forward(views, training=True)
        psi, grad = batch_loss_and_grad(embeddings, self.config.temperature)
        self.network.backward(grad)
        self.step()
        _LOGGER.debug("Batch of %s pairs: psi %.5f", len(indices), psi)
        return {PSI_COLUMN: psi}


@dataclass
class PretrainResult:
    """Trained checkpoint with its per-epoch loss trajectory."""
    checkpoint: ModelCheckpoint
    history: TrainingHistory
    network: Network

    @property
    def trajectory(self):
        return list(self.history.losses)

    def write_trajectory(self, path: Path) -> None:
        self.history.write_csv(path)


def pretrain(
    manifest: DatasetManifest,
    config: PretrainConfig,
    lbp_config: LbpConfig,
    seed: int,
    store: Optional[TextureSource] = None,
    patient_ids: Optional[Iterable[str]] = None,
    spec: Optional[NetworkSpec] = None,
    jobs: int = 1,
) -> PretrainResult:
    """Train encoder and projection head on label-free texture maps.

    Manifest labels are ignored. ``patient_ids`` restricts the patch set to a patient
    subset.
    """
    config.validate()
    lbp_config.validate()
    entries = list(manifest.entries)
    if patient_ids is not None:
        wanted = set(patient_ids)
        entries = [e for e in entries if e.patient_id in wanted]
    if not entries:
        raise DataError("Pretraining needs a non-empty patch set")
    if config.batch_size > len(entries):
        raise DataError(
            f"Batch size {config.batch_size} exceeds the {len(entries)} available patches"
        )

    store = store or TextureStore(manifest, lbp_config, jobs)
    textures = store.get_maps(entries)
    network = NetworkFactory.create_pretrain_network(seed, spec)
    state = OptimizerState.adam(
        learning_rate=config.learning_rate,
        weight_decay=config.weight_decay,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )
    trainer = ContrastiveTrainer(network, create_optimizer(state), textures, config, seed)
    _LOGGER.info("Pretraining on %s patches for %s epochs (batch %s, tau %s)",
                 len(entries), config.epochs, config.batch_size, config.temperature)
    history = trainer.fit(config.epochs)

    checkpoint = ModelCheckpoint.from_network(
        network, seed, CHECKPOINT_ROLE_PRETRAIN, optimizer=state,
        lbp={"p": lbp_config.p, "r": lbp_config.r},
        history=history.to_dict(),
    )
    return PretrainResult(checkpoint, history, network)
