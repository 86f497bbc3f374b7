"""Augmentation of normalized texture maps into contrastive view pairs."""
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..config import AugmentConfig
from ..nn.random import derive_stream

AUGMENT_STREAM = "augment"


@dataclass
class AugmentedPair:
    """Two views of one texture map."""
    view_a: np.ndarray
    view_b: np.ndarray
    origin_id: str


def augment(texture: np.ndarray, rng: np.random.Generator,
            config: AugmentConfig = AugmentConfig()) -> np.ndarray:
    """Coin-flip horizontal and vertical flips, then a k*90 degree rotation.

    Enabled flips and quarter turns only permute pixels. The optional free-angle
    rotation resamples bilinearly and clips to [0, 1].
    """
    view = np.asarray(texture)
    if config.horizontal_flip and rng.random() < 0.5:
        view = view[..., :, ::-1]
    if config.vertical_flip and rng.random() < 0.5:
        view = view[..., ::-1, :]
    if config.rotate90:
        square = view.shape[-1] == view.shape[-2]
        k = int(rng.integers(0, 4)) if square else 2 * int(rng.integers(0, 2))
        view = np.rot90(view, k, axes=(-2, -1))
    if config.free_rotation:
        angle = float(rng.uniform(0.0, 360.0))
        view = ndimage.rotate(view, angle, axes=(-1, -2), reshape=False, order=1,
                              mode="reflect")
        view = np.clip(view, 0.0, 1.0)
    return np.ascontiguousarray(view, dtype=np.asarray(texture).dtype)


def make_pair(texture: np.ndarray, origin_id: str, seed: int, epoch: int, index: int,
              config: AugmentConfig = AugmentConfig()) -> AugmentedPair:
    """Both views drawn from the stream keyed by (epoch, sample index)."""
    rng = derive_stream(seed, AUGMENT_STREAM, epoch, index)
    return AugmentedPair(augment(texture, rng, config), augment(texture, rng, config),
                         origin_id)


def contrastive_views(textures: np.ndarray, indices, seed: int, epoch: int,
                      config: AugmentConfig = AugmentConfig()) -> np.ndarray:
    """2B views ordered (a0, b0, a1, b1, ...) from B texture maps of shape (B, 1, h, w)."""
    views = []
    for texture, index in zip(textures, indices):
        pair = make_pair(texture, str(index), seed, epoch, int(index), config)
        views.extend((pair.view_a, pair.view_b))
    return np.stack(views)
