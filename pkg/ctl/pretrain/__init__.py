"""Contrastive texture pretraining."""
from .augment import AugmentedPair, augment, contrastive_views, make_pair
from .loss import batch_loss, batch_loss_and_grad, contrastive_pair_loss, cosine_matrix
from .trainer import ContrastiveTrainer, PretrainResult, pretrain

__all__ = [
    "AugmentedPair",
    "ContrastiveTrainer",
    "PretrainResult",
    "augment",
    "batch_loss",
    "batch_loss_and_grad",
    "contrastive_pair_loss",
    "contrastive_views",
    "cosine_matrix",
    "make_pair",
    "pretrain",
]
