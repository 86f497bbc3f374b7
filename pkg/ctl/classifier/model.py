"""Downstream network construction and patch prediction."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import LbpConfig
from ..const import (
    CHECKPOINT_ROLE_DOWNSTREAM,
    CLASS_NAMES,
    HEAD_GAP_LINEAR,
    HIGH_RISK_INDICES,
    LOW_RISK_INDICES,
)
from ..data.models import ClassLabel
from ..error_handler import CheckpointError
from ..nn.checkpoint import CODE_ARCHITECTURE, ModelCheckpoint
from ..nn.factory import NetworkFactory
from ..nn.network import Network, NetworkSpec
from ..texture.lbp import extract_normalized_batch

_LOGGER = logging.getLogger(__name__)

PREDICT_BATCH = 64


@dataclass(frozen=True)
class ClassProbabilities:
    """Five-class distribution of one patch."""
    p: Tuple[float, ...]

    @property
    def predicted_index(self) -> int:
        return int(np.argmax(self.p))

    @property
    def predicted_label(self) -> ClassLabel:
        return ClassLabel.from_index(self.predicted_index)

    @property
    def high_risk_prob(self) -> float:
        return float(sum(self.p[i] for i in HIGH_RISK_INDICES))

    @property
    def low_risk_prob(self) -> float:
        return float(sum(self.p[i] for i in LOW_RISK_INDICES))

    @classmethod
    def from_array(cls, row: np.ndarray) -> "ClassProbabilities":
        return cls(tuple(float(v) for v in np.asarray(row, dtype=np.float64)))

    def to_dict(self) -> Dict:
        return {
            "probabilities": dict(zip(CLASS_NAMES, self.p)),
            "predicted_label": self.predicted_label.value,
            "high_risk_prob": self.high_risk_prob,
        }


def build_downstream(seed: int, checkpoint: Optional[ModelCheckpoint] = None,
                     freeze_encoder: bool = False,
                     spec: Optional[NetworkSpec] = None) -> Network:
    """Encoder (optionally from a checkpoint) + GAP + dense(5) + softmax."""
    return NetworkFactory.create_downstream_network(seed, spec, checkpoint, freeze_encoder)


def model_checkpoint(network: Network, seed: int, lbp_config: LbpConfig,
                     **extra) -> ModelCheckpoint:
    """Downstream checkpoint carrying the LBP settings it was trained with."""
    return ModelCheckpoint.from_network(
        network, seed, CHECKPOINT_ROLE_DOWNSTREAM,
        lbp={"p": lbp_config.p, "r": lbp_config.r}, **extra,
    )


def checkpoint_lbp(checkpoint: ModelCheckpoint,
                   default: Optional[LbpConfig] = None) -> LbpConfig:
    if "lbp" in checkpoint.meta:
        return LbpConfig.from_dict(checkpoint.meta["lbp"])
    return default or LbpConfig()


def load_model(path: Path) -> Tuple[Network, LbpConfig]:
    """Rebuild a trained downstream network from its checkpoint file."""
    checkpoint = ModelCheckpoint.load(path)
    spec = checkpoint.network_spec
    if spec.head != HEAD_GAP_LINEAR:
        raise CheckpointError(f"{path} holds a {spec.head} network, not a classifier",
                              code=CODE_ARCHITECTURE)
    network = build_downstream(checkpoint.seed, spec=spec)
    checkpoint.apply(network, strict=True)
    _LOGGER.info("Loaded classifier from %s", path)
    return network, checkpoint_lbp(checkpoint)


def predict_maps(network: Network, maps: np.ndarray,
                 batch_size: int = PREDICT_BATCH) -> np.ndarray:
    """(N, 5) inference-mode probabilities for (N, 1, h, w) texture maps."""
    chunks = [network.forward(maps[i:i + batch_size], training=False)
              for i in range(0, len(maps), batch_size)]
    return np.concatenate(chunks).astype(np.float64)


def predict_patches(network: Network, images: Sequence[np.ndarray], lbp_config: LbpConfig,
                    jobs: int = 1) -> np.ndarray:
    """(N, 5) probabilities through LBP extraction, normalization and the network."""
    maps = extract_normalized_batch(list(images), lbp_config, jobs)
    return predict_maps(network, maps)


def predict_patch(network: Network, image: np.ndarray,
                  lbp_config: LbpConfig) -> ClassProbabilities:
    return ClassProbabilities.from_array(predict_patches(network, [image], lbp_config)[0])


def probabilities_list(probabilities: np.ndarray) -> List[ClassProbabilities]:
    return [ClassProbabilities.from_array(row) for row in probabilities]
