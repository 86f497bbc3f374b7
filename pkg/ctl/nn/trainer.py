"""Shared mini-batch training loop."""
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .network import Network
from .optim import Optimizer
from .random import derive_stream

_LOGGER = logging.getLogger(__name__)


@dataclass
class TrainingHistory:
    """Per-epoch mean loss plus optional extra per-epoch metrics."""
    loss_name: str = "loss"
    losses: List[float] = field(default_factory=list)
    metrics: Dict[str, List[float]] = field(default_factory=dict)

    def record(self, loss: float, **metrics: float) -> None:
        self.losses.append(float(loss))
        for name, value in metrics.items():
            self.metrics.setdefault(name, []).append(float(value))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"epoch": np.arange(1, len(self.losses) + 1),
                              self.loss_name: self.losses})
        for name, values in self.metrics.items():
            frame[name] = values
        return frame

    def write_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False)

    def to_dict(self) -> Dict[str, List[float]]:
        data = {self.loss_name: list(self.losses)}
        data.update({k: list(v) for k, v in self.metrics.items()})
        return data


class BaseTrainer(ABC):
    """Shuffled mini-batch loop over a fixed sample count.

    Batch order is drawn from a stream keyed by (seed, stream name, epoch), so runs
    with equal seeds see identical batches.
    """

    stream_name = "train"
    loss_name = "loss"

    def __init__(self, network: Network, optimizer: Optimizer, batch_size: int, seed: int,
                 drop_last: bool = True):
        self.network = network
        self.optimizer = optimizer
        self.batch_size = batch_size
        self.seed = seed
        self.drop_last = drop_last
        self.history = TrainingHistory(self.loss_name)

    @property
    @abstractmethod
    def sample_count(self) -> int:
        """Number of training samples."""

    @abstractmethod
    def train_batch(self, indices: np.ndarray, epoch: int) -> Dict[str, float]:
        """Run forward, backward and one optimizer step; return batch statistics."""

    def batches(self, epoch: int) -> List[np.ndarray]:
        order = derive_stream(self.seed, f"{self.stream_name}.shuffle", epoch).permutation(
            self.sample_count
        )
        size = min(self.batch_size, self.sample_count)
        batches = [order[i:i + size] for i in range(0, self.sample_count, size)]
        if batches and len(batches[-1]) < size and (self.drop_last or len(batches[-1]) < 2):
            _LOGGER.debug("Dropping incomplete batch of %s samples", len(batches[-1]))
            batches.pop()
        return batches

    def step(self) -> None:
        self.optimizer.step(self.network.trainable_parameters())

    def fit(self, epochs: int, callback: Optional[callable] = None) -> TrainingHistory:
        for epoch in range(epochs):
            started = time.monotonic()
            stats: Dict[str, List[float]] = {}
            weights = []
            for indices in self.batches(epoch):
                for name, value in self.train_batch(indices, epoch).items():
                    stats.setdefault(name, []).append(value)
                weights.append(len(indices))
            means = {name: float(np.average(values, weights=weights))
                     for name, values in stats.items()}
            loss = means.pop(self.loss_name, float("nan"))
            self.history.record(loss, **means)
            _LOGGER.info("Epoch %s/%s: %s %.5f (%.1fs)", epoch + 1, epochs, self.loss_name,
                         loss, time.monotonic() - started)
            if callback is not None:
                callback(epoch, loss)
        return self.history
