"""Texture similarity of misclassified patches."""
import logging
from typing import Mapping, Union

from ..config import LbpConfig
from ..data.imageio import read_pgm
from ..data.models import ClassLabel, DatasetManifest
from ..error_handler import DataError
from ..texture.histogram import SimilarityDistribution, similarity_distribution

_LOGGER = logging.getLogger(__name__)


def misclassified_similarity(manifest: DatasetManifest, predictions: Mapping[str, int],
                             truth_label: Union[ClassLabel, str],
                             predicted_label: Union[ClassLabel, str],
                             config: LbpConfig) -> SimilarityDistribution:
    """Compare patches of class A predicted as B against correctly classified B patches.

    ``predictions`` maps patch uid to predicted class index.
    """
    truth_label = ClassLabel(truth_label)
    predicted_label = ClassLabel(predicted_label)
    if truth_label == predicted_label:
        raise DataError("Truth and predicted label must differ")
    confused, reference = [], []
    for entry in manifest.entries:
        if entry.uid not in predictions:
            continue
        guess = int(predictions[entry.uid])
        if entry.label == truth_label and guess == predicted_label.index:
            confused.append(entry)
        elif entry.label == predicted_label and guess == predicted_label.index:
            reference.append(entry)
    if not confused:
        raise DataError(f"No {truth_label.value} patches predicted as {predicted_label.value}")
    if not reference:
        raise DataError(f"No correctly classified {predicted_label.value} patches")
    _LOGGER.info("Comparing %s misclassified %s patches with %s %s patches", len(confused),
                 truth_label.value, len(reference), predicted_label.value)
    return similarity_distribution(
        [read_pgm(manifest.resolve(e.image_path)) for e in confused],
        [read_pgm(manifest.resolve(e.image_path)) for e in reference],
        config,
    )
