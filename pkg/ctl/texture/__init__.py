"""Rotation-invariant LBP texture maps, histograms and patch similarity."""
from .histogram import (
    SimilarityDistribution,
    TextureHistogram,
    patch_similarity,
    similarity_distribution,
    texture_histogram,
    write_codes_csv,
    write_histograms_csv,
    write_normalized_pgm16,
)
from .lbp import (
    TextureMap,
    extract_normalized_batch,
    extract_texture_map,
    lbp_code_at,
    rotation_invariant,
)

__all__ = [
    "SimilarityDistribution",
    "TextureHistogram",
    "TextureMap",
    "extract_normalized_batch",
    "extract_texture_map",
    "lbp_code_at",
    "patch_similarity",
    "rotation_invariant",
    "similarity_distribution",
    "texture_histogram",
    "write_codes_csv",
    "write_histograms_csv",
    "write_normalized_pgm16",
]
