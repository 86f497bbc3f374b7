"""Class activation maps of the GAP + linear classifier."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from ..config import LbpConfig
from ..data.imageio import write_ppm
from ..error_handler import CamError
from ..nn.network import Network
from ..texture.lbp import extract_texture_map
from .colormap import colormap

_LOGGER = logging.getLogger(__name__)


@dataclass
class ActivationMap:
    """Last-conv resolution CAM and its min-max normalized upsampling."""
    raw: np.ndarray
    upsampled: np.ndarray
    class_index: int


def class_activation(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_k w_k F_k over (K, h, w) feature maps."""
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if features.ndim != 3 or weights.shape != (features.shape[0],):
        raise CamError(f"Need (K, h, w) features and K weights, got {features.shape} "
                       f"and {weights.shape}")
    return np.tensordot(weights, features, axes=1)


def upsample(raw: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Bilinear resize with pixel-center alignment."""
    h, w = raw.shape
    ys = np.clip((np.arange(size[0]) + 0.5) * h / size[0] - 0.5, 0, h - 1)
    xs = np.clip((np.arange(size[1]) + 0.5) * w / size[1] - 0.5, 0, w - 1)
    grid = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(raw, grid, order=1, mode="nearest")


def normalize(values: np.ndarray) -> np.ndarray:
    low, high = float(values.min()), float(values.max())
    if high == low:
        return np.zeros_like(values, dtype=np.float64)
    return (values - low) / (high - low)


def activation_map(features: np.ndarray, weights: np.ndarray, class_index: int,
                   size: Tuple[int, int]) -> ActivationMap:
    raw = class_activation(features, weights)
    return ActivationMap(raw, normalize(upsample(raw, size)), class_index)


def compute_cam(network: Network, image: np.ndarray, class_index: int,
                lbp_config: LbpConfig) -> ActivationMap:
    """CAM of one patch for a class, sized like the network input texture map."""
    classifier = network.classifier
    if classifier is None:
        raise CamError("CAM needs a network with a GAP + linear classification head")
    if not 0 <= class_index < classifier.out_features:
        raise CamError(f"Class index {class_index} outside [0, {classifier.out_features})")
    texture = extract_texture_map(image, lbp_config).normalized
    network.forward(texture[None, None], training=False)
    weights = classifier.params.weights.data[class_index]
    return activation_map(network.features[0], weights, class_index, texture.shape)


def interior(image: np.ndarray, lbp_config: LbpConfig) -> np.ndarray:
    """Image crop aligned with its texture map."""
    margin = lbp_config.margin
    image = np.asarray(image)
    return image[margin:image.shape[0] - margin, margin:image.shape[1] - margin]


def _gray(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype == np.uint8:
        return image.astype(np.float64)
    peak = float(image.max()) if image.size else 0.0
    return image.astype(np.float64) * (255.0 / peak) if peak > 0 else np.zeros(image.shape)


def emit_overlay(image: np.ndarray, cam: ActivationMap, alpha: float,
                 path: Optional[Path] = None) -> np.ndarray:
    """(1 - alpha) * gray + alpha * colormap(cam) as uint8 RGB, optionally written as PPM."""
    if not 0.0 <= alpha <= 1.0:
        raise CamError(f"Alpha must lie in [0, 1], got {alpha}")
    image = np.asarray(image)
    if image.ndim != 2 or image.shape != cam.upsampled.shape:
        raise CamError(f"Image {image.shape} does not match the {cam.upsampled.shape} CAM")
    gray = np.repeat(_gray(image)[..., None], 3, axis=-1)
    heat = colormap(cam.upsampled).astype(np.float64)
    rgb = np.clip(np.rint((1.0 - alpha) * gray + alpha * heat), 0, 255).astype(np.uint8)
    if path is not None:
        write_ppm(path, rgb)
        _LOGGER.info("Wrote CAM overlay for class %s to %s", cam.class_index, path)
    return rgb
