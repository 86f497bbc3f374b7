"""Circular local binary patterns with rotation-invariant mapping."""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..config import LbpConfig
from ..const import LBP_OFFSET_DECIMALS
from ..error_handler import ConfigError, TextureError

_LOGGER = logging.getLogger(__name__)


@dataclass
class TextureMap:
    """Rotation-invariant codes of the interior pixels and their min-max scaled form."""
    codes: np.ndarray
    normalized: np.ndarray
    source_size: Tuple[int, int]
    config: LbpConfig

    @property
    def shape(self) -> Tuple[int, int]:
        return self.codes.shape


def _validated(config: LbpConfig) -> LbpConfig:
    try:
        return config.validate()
    except ConfigError as e:
        raise TextureError(str(e)) from e


def neighbor_offsets(config: LbpConfig) -> List[Tuple[float, float]]:
    """(row, col) offsets of the P circle samples, rounded so symmetric points coincide."""
    offsets = []
    for p in range(config.p):
        angle = 2.0 * math.pi * p / config.p
        dy = round(-config.r * math.sin(angle), LBP_OFFSET_DECIMALS) + 0.0
        dx = round(config.r * math.cos(angle), LBP_OFFSET_DECIMALS) + 0.0
        offsets.append((dy, dx))
    return offsets


def _lerp(a, b, t: float):
    if t == 0.0:
        return a
    return a + t * (b - a)


def _sample_plane(image: np.ndarray, dy: float, dx: float, margin: int) -> np.ndarray:
    """Bilinear samples at (row + dy, col + dx) for every interior pixel."""
    h = image.shape[0] - 2 * margin
    w = image.shape[1] - 2 * margin
    y0, x0 = math.floor(dy), math.floor(dx)
    fy, fx = dy - y0, dx - x0

    def window(oy, ox):
        return image[margin + oy:margin + oy + h, margin + ox:margin + ox + w]

    top = window(y0, x0) if fx == 0.0 else _lerp(window(y0, x0), window(y0, x0 + 1), fx)
    if fy == 0.0:
        return top
    bottom = window(y0 + 1, x0) if fx == 0.0 else _lerp(
        window(y0 + 1, x0), window(y0 + 1, x0 + 1), fx
    )
    return _lerp(top, bottom, fy)


def _as_image(image) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise TextureError(f"LBP expects a 2-D grayscale image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise TextureError("Image contains non-finite values")
    return image


def lbp_code_at(image, center: Tuple[int, int], config: LbpConfig) -> int:
    """Raw P-bit LBP code of one pixel; bit p is set when g_p >= g_c."""
    config = _validated(config)
    image = _as_image(image)
    row, col = center
    margin = config.margin
    if not (margin <= row < image.shape[0] - margin and margin <= col < image.shape[1] - margin):
        raise TextureError(
            f"Center {center} lies within {margin} pixels of the border of a "
            f"{image.shape[0]}x{image.shape[1]} image"
        )
    patch = image[row - margin:row + margin + 1, col - margin:col + margin + 1]
    center_value = image[row, col]
    code = 0
    for p, (dy, dx) in enumerate(neighbor_offsets(config)):
        if _sample_plane(patch, dy, dx, margin)[0, 0] >= center_value:
            code |= 1 << p
    return code


def _word_mask(p: int) -> np.uint64:
    return np.uint64((1 << p) - 1)


def rotate_right(codes: np.ndarray, shift: int, p: int) -> np.ndarray:
    """Circular right rotation within a P-bit word."""
    codes = np.asarray(codes, dtype=np.uint64)
    shift %= p
    if shift == 0:
        return codes.copy()
    return ((codes >> np.uint64(shift)) | (codes << np.uint64(p - shift))) & _word_mask(p)


def rotation_invariant_array(codes: np.ndarray, p: int) -> np.ndarray:
    """Minimum over all P circular rotations, element-wise."""
    codes = np.asarray(codes, dtype=np.uint64) & _word_mask(p)
    best = codes.copy()
    for shift in range(1, p):
        np.minimum(best, rotate_right(codes, shift, p), out=best)
    return best


def rotation_invariant(code: int, p: int) -> int:
    """Smallest value among the P circular rotations of ``code``."""
    if code < 0 or code >= 1 << p:
        raise TextureError(f"Code {code} does not fit in {p} bits")
    return int(rotation_invariant_array(np.array([code], dtype=np.uint64), p)[0])


def raw_codes(image, config: LbpConfig) -> np.ndarray:
    """Raw LBP codes of all interior pixels as uint64."""
    config = _validated(config)
    image = _as_image(image)
    margin = config.margin
    min_side = 2 * margin + 2
    if min(image.shape) < min_side:
        raise TextureError(
            f"Image {image.shape[0]}x{image.shape[1]} is smaller than {min_side} pixels "
            f"per side required for R={config.r}"
        )
    center = image[margin:image.shape[0] - margin, margin:image.shape[1] - margin]
    codes = np.zeros(center.shape, dtype=np.uint64)
    for p, (dy, dx) in enumerate(neighbor_offsets(config)):
        bit = (_sample_plane(image, dy, dx, margin) >= center).astype(np.uint64)
        codes |= bit << np.uint64(p)
    return codes


def min_max_normalize(codes: np.ndarray) -> np.ndarray:
    """(codes - min) / (max - min) in 64-bit, cast to float32; zeros for a constant map."""
    values = codes.astype(np.float64)
    low, high = values.min(), values.max()
    if high == low:
        return np.zeros(codes.shape, dtype=np.float32)
    return ((values - low) / (high - low)).astype(np.float32)


def extract_texture_map(image, config: LbpConfig) -> TextureMap:
    """Rotation-invariant LBP map of the interior plus its normalized form."""
    image = _as_image(image)
    codes = rotation_invariant_array(raw_codes(image, config), config.p)
    return TextureMap(
        codes=codes,
        normalized=min_max_normalize(codes),
        source_size=(int(image.shape[0]), int(image.shape[1])),
        config=config,
    )


def texture_map_size(image_size: Tuple[int, int], config: LbpConfig) -> Tuple[int, int]:
    """Interior map dimensions for an image of the given size."""
    margin = config.margin
    return image_size[0] - 2 * margin, image_size[1] - 2 * margin


def _normalized(image, config: LbpConfig) -> np.ndarray:
    return extract_texture_map(image, config).normalized


def extract_normalized_batch(images: Sequence[np.ndarray], config: LbpConfig,
                             jobs: int = 1) -> np.ndarray:
    """Stack normalized texture maps as an (N, 1, h, w) float32 network batch.

    Order follows ``images`` regardless of ``jobs``.
    """
    if not len(images):
        raise TextureError("No images to extract")
    if jobs > 1 and len(images) > 1:
        maps = Parallel(n_jobs=jobs)(delayed(_normalized)(image, config) for image in images)
    else:
        maps = [_normalized(image, config) for image in images]
    shapes = {m.shape for m in maps}
    if len(shapes) != 1:
        raise TextureError(f"Images produce differently sized texture maps: {sorted(shapes)}")
    _LOGGER.debug("Extracted %s texture maps (P=%s, R=%s)", len(maps), config.p, config.r)
    return np.stack(maps)[:, None, :, :]
