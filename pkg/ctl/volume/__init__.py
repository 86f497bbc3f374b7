"""Volume-level aggregation of patch predictions."""
from .vote import (
    PatchPredictionMatrix,
    VolumePrediction,
    VoteResult,
    cross_vote,
    heat_matrix_export,
    heat_matrix_image,
    load_frames,
    model_predictor,
    predict_volume,
)

__all__ = [
    "PatchPredictionMatrix",
    "VolumePrediction",
    "VoteResult",
    "cross_vote",
    "heat_matrix_export",
    "heat_matrix_image",
    "load_frames",
    "model_predictor",
    "predict_volume",
]
