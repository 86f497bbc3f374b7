"""Normalized-temperature contrastive loss over paired views."""
import logging
from typing import Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..error_handler import LossError

_LOGGER = logging.getLogger(__name__)


def _unit_rows(embeddings: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = np.asarray(embeddings, dtype=np.float64)
    if z.ndim != 2:
        raise LossError(f"Embeddings must be (2B, d), got shape {z.shape}")
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0.0):
        raise LossError("Cosine similarity of a zero-norm embedding is undefined")
    return z / norms[:, None], norms


def cosine_matrix(embeddings: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities in 64-bit."""
    unit, _ = _unit_rows(embeddings)
    return unit @ unit.T


def partner_index(count: int) -> np.ndarray:
    """Positive partner of every view under the (2k, 2k+1) pairing."""
    return np.arange(count) ^ 1


def _logits(similarity: np.ndarray, temperature: float) -> np.ndarray:
    logits = similarity / temperature
    np.fill_diagonal(logits, -np.inf)
    return logits


def contrastive_pair_loss(embeddings: np.ndarray, i: int, j: int,
                          temperature: float) -> float:
    """Directed loss of view i against its positive j; negatives are every other view."""
    if not temperature > 0:
        raise LossError(f"Temperature must be positive, got {temperature}")
    if i == j:
        raise LossError("A view cannot be its own positive")
    logits = _logits(cosine_matrix(embeddings), temperature)[i]
    return max(0.0, float(-logits[j] + logsumexp(logits)))


def batch_loss_and_grad(embeddings: np.ndarray,
                        temperature: float) -> Tuple[float, np.ndarray]:
    """Mean directed loss over all 2B views and its gradient w.r.t. the embeddings."""
    if not temperature > 0:
        raise LossError(f"Temperature must be positive, got {temperature}")
    z = np.asarray(embeddings)
    count = z.shape[0] if z.ndim else 0
    if count < 2 or count % 2:
        raise LossError(f"Contrastive batches need an even number >= 2 of views, got {count}")
    unit, norms = _unit_rows(z)
    logits = _logits(unit @ unit.T, temperature)
    rows = np.arange(count)
    partners = partner_index(count)
    losses = np.maximum(0.0, -logits[rows, partners] + logsumexp(logits, axis=1))
    psi = float(losses.mean())

    weights = softmax(logits, axis=1)
    weights[rows, partners] -= 1.0
    grad_sim = weights / (count * temperature)
    grad_unit = (grad_sim + grad_sim.T) @ unit
    radial = np.sum(unit * grad_unit, axis=1, keepdims=True)
    grad = (grad_unit - unit * radial) / norms[:, None]
    return psi, grad.astype(z.dtype if np.issubdtype(z.dtype, np.floating) else np.float64)


def batch_loss(embeddings: np.ndarray, temperature: float) -> float:
    """Mean of the 2B directed pair losses."""
    return batch_loss_and_grad(embeddings, temperature)[0]
