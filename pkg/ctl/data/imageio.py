"""Binary PGM/PPM image files."""
import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..error_handler import DataError

_LOGGER = logging.getLogger(__name__)


def _open(path: Path) -> Image.Image:
    try:
        with Image.open(path) as image:
            image.load()
            return image
    except (OSError, UnidentifiedImageError) as e:
        raise DataError(f"Cannot read image {path}: {e}") from e


def read_pgm(path: Path) -> np.ndarray:
    """Grayscale image as a 2-D array (uint8, or uint16 for 16-bit files)."""
    image = _open(path)
    if image.mode == "L":
        return np.asarray(image, dtype=np.uint8)
    if image.mode.startswith("I"):
        return np.asarray(image).astype(np.uint16)
    raise DataError(f"{path} is not a grayscale image (mode {image.mode})")


def write_pgm(path: Path, pixels: np.ndarray) -> None:
    """8-bit binary PGM (P5)."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise DataError(f"PGM needs a 2-D array, got shape {pixels.shape}")
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format="PPM")


def read_ppm(path: Path) -> np.ndarray:
    """Color image as an (H, W, 3) uint8 array."""
    image = _open(path)
    if image.mode != "RGB":
        raise DataError(f"{path} is not an RGB image (mode {image.mode})")
    return np.asarray(image, dtype=np.uint8)


def write_ppm(path: Path, rgb: np.ndarray) -> None:
    """Binary PPM (P6) from an (H, W, 3) array."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DataError(f"PPM needs an (H, W, 3) array, got shape {rgb.shape}")
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PPM")
    _LOGGER.debug("Wrote %sx%s PPM %s", rgb.shape[1], rgb.shape[0], path)
