"""Downstream five-class classifier."""
from .analysis import misclassified_similarity
from .loss import cross_entropy_loss, logit_gradient
from .model import (
    ClassProbabilities,
    build_downstream,
    load_model,
    model_checkpoint,
    predict_patch,
    predict_patches,
)
from .trainer import (
    ClassifierTrainer,
    CrossValidationResult,
    EvaluationResult,
    FinetuneResult,
    cross_validate,
    evaluate_entries,
    finetune,
)

__all__ = [
    "ClassProbabilities",
    "ClassifierTrainer",
    "CrossValidationResult",
    "EvaluationResult",
    "FinetuneResult",
    "build_downstream",
    "cross_entropy_loss",
    "cross_validate",
    "evaluate_entries",
    "finetune",
    "load_model",
    "logit_gradient",
    "misclassified_similarity",
    "model_checkpoint",
    "predict_patch",
    "predict_patches",
]
