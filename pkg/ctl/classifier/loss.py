"""Categorical cross-entropy over softmax outputs."""
import logging
from typing import Tuple

import numpy as np

from ..const import NUM_CLASSES, PROBABILITY_FLOOR
from ..error_handler import LossError

_LOGGER = logging.getLogger(__name__)


def one_hot(labels, num_classes: int = NUM_CLASSES) -> np.ndarray:
    """Class indices to one-hot rows; one-hot input passes through."""
    labels = np.asarray(labels)
    if labels.ndim == 2:
        if labels.shape[1] != num_classes:
            raise LossError(f"One-hot labels need {num_classes} columns, got {labels.shape}")
        return labels.astype(np.float64)
    if labels.ndim != 1 or np.any(labels < 0) or np.any(labels >= num_classes):
        raise LossError(f"Labels must be class indices in [0, {num_classes})")
    return np.eye(num_classes)[labels.astype(np.int64)]


def cross_entropy_loss(probabilities: np.ndarray, labels) -> Tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. the probabilities.

    True-class probabilities below the floor are clamped with a warning.
    """
    dtype = np.asarray(probabilities).dtype
    if not np.issubdtype(dtype, np.floating):
        dtype = np.float64
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0:
        raise LossError(f"Probabilities must be (N >= 1, M), got shape {p.shape}")
    y = one_hot(labels, p.shape[1])
    if y.shape[0] != p.shape[0]:
        raise LossError(f"{p.shape[0]} predictions for {y.shape[0]} labels")
    n = p.shape[0]
    true_p = np.sum(y * p, axis=1)
    clamped = int(np.sum(true_p < PROBABILITY_FLOOR))
    if clamped:
        _LOGGER.warning("Clamped %s true-class probabilities at %s", clamped,
                        PROBABILITY_FLOOR)
    safe = np.maximum(p, PROBABILITY_FLOOR)
    phi = float(-np.sum(y * np.log(safe)) / n)
    grad = -y / (n * safe)
    return phi, grad.astype(dtype)


def logit_gradient(probabilities: np.ndarray, labels) -> np.ndarray:
    """(softmax - one-hot) / N, the loss gradient w.r.t. the pre-softmax logits."""
    p = np.asarray(probabilities, dtype=np.float64)
    return (p - one_hot(labels, p.shape[1])) / p.shape[0]
