"""Uniform-pattern histograms, cosine patch similarity and texture exports."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from PIL import Image

from ..config import LbpConfig
from ..error_handler import TextureError
from .lbp import TextureMap, extract_texture_map, rotate_right

_LOGGER = logging.getLogger(__name__)

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass
class TextureHistogram:
    """P + 2 L1-normalized bins: popcount of uniform patterns, then one bin for the rest."""
    bins: np.ndarray

    @property
    def p(self) -> int:
        return len(self.bins) - 2


def popcount(codes: np.ndarray) -> np.ndarray:
    """Number of set bits of every uint64 code."""
    codes = np.ascontiguousarray(codes, dtype=np.uint64)
    octets = codes.reshape(-1).view(np.uint8).reshape(-1, 8)
    return _POPCOUNT8[octets].sum(axis=1, dtype=np.int64).reshape(codes.shape)


def uniform_bins(codes: np.ndarray, p: int) -> np.ndarray:
    """Bin index per code: popcount for patterns with <= 2 circular transitions, else P + 1."""
    codes = np.asarray(codes, dtype=np.uint64)
    transitions = popcount(codes ^ rotate_right(codes, 1, p))
    return np.where(transitions <= 2, popcount(codes), p + 1)


def texture_histogram(texture: TextureMap) -> TextureHistogram:
    """Uniform-pattern histogram of a texture map."""
    if texture.codes.size == 0:
        raise TextureError("Cannot build a histogram of an empty texture map")
    p = texture.config.p
    counts = np.bincount(uniform_bins(texture.codes, p).ravel(), minlength=p + 2)
    return TextureHistogram(bins=counts.astype(np.float64) / counts.sum())


def patch_similarity(a: TextureHistogram, b: TextureHistogram) -> float:
    """Cosine similarity of two histograms."""
    x = np.asarray(a.bins, dtype=np.float64)
    y = np.asarray(b.bins, dtype=np.float64)
    if x.shape != y.shape:
        raise TextureError(f"Histogram sizes differ: {x.shape[0]} vs {y.shape[0]}")
    norm_x, norm_y = np.linalg.norm(x), np.linalg.norm(y)
    if norm_x == 0.0 or norm_y == 0.0:
        raise TextureError("Cosine similarity of a zero histogram is undefined")
    return float(np.clip(x @ y / (norm_x * norm_y), -1.0, 1.0))


@dataclass
class SimilarityDistribution:
    """All cross-group similarities with the summary used for violin plots."""
    values: np.ndarray
    median: float
    q1: float
    q3: float
    minimum: float
    maximum: float

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "SimilarityDistribution":
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            raise TextureError("Similarity distribution needs at least one pair")
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        return cls(values, float(median), float(q1), float(q3),
                   float(values.min()), float(values.max()))

    def to_dict(self, include_values: bool = False) -> Dict:
        data = {
            "count": int(self.values.size),
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "min": self.minimum,
            "max": self.maximum,
        }
        if include_values:
            data["values"] = self.values.tolist()
        return data


def _histograms(patches: Sequence, config: LbpConfig) -> np.ndarray:
    rows = []
    for patch in patches:
        hist = patch if isinstance(patch, TextureHistogram) else texture_histogram(
            extract_texture_map(patch, config)
        )
        rows.append(hist.bins)
    return np.asarray(rows, dtype=np.float64)


def similarity_distribution(group_a: Sequence, group_b: Sequence,
                            config: LbpConfig) -> SimilarityDistribution:
    """Similarity of every (a, b) pair across two groups of patches or histograms."""
    if not len(group_a) or not len(group_b):
        raise TextureError("Both patch groups must be non-empty")
    a = _histograms(group_a, config)
    b = _histograms(group_b, config)
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    if np.any(norms_a == 0) or np.any(norms_b == 0):
        raise TextureError("Cosine similarity of a zero histogram is undefined")
    sims = np.clip((a @ b.T) / np.outer(norms_a, norms_b), -1.0, 1.0)
    return SimilarityDistribution.from_values(sims.ravel())


def write_codes_csv(texture: TextureMap, path: Path) -> None:
    """Integer codes, one CSV row per map row."""
    pd.DataFrame(texture.codes).to_csv(path, header=False, index=False)


def write_normalized_pgm16(texture: TextureMap, path: Path) -> None:
    """Normalized map as a 16-bit binary PGM (maxval 65535)."""
    scaled = np.rint(texture.normalized.astype(np.float64) * 65535.0).astype(np.int32)
    Image.fromarray(scaled).save(path, format="PPM")


def write_histograms_csv(rows: Sequence[Tuple[str, TextureHistogram]], path: Path,
                         p: Optional[int] = None) -> None:
    """One row per patch: identifier then the P + 2 bins."""
    if not rows:
        raise TextureError("No histograms to write")
    p = rows[0][1].p if p is None else p
    columns = [f"bin_{i}" for i in range(p + 2)]
    frame = pd.DataFrame([hist.bins for _, hist in rows], columns=columns)
    frame.insert(0, "patch_id", [patch_id for patch_id, _ in rows])
    frame.to_csv(path, index=False)
    _LOGGER.info("Wrote %s histograms to %s", len(rows), path)


def read_histograms_csv(path: Path) -> List[Tuple[str, TextureHistogram]]:
    frame = pd.read_csv(path)
    bins = frame.drop(columns=["patch_id"]).to_numpy(dtype=np.float64)
    return [(str(pid), TextureHistogram(row)) for pid, row in zip(frame["patch_id"], bins)]
