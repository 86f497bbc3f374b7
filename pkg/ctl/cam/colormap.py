"""Blue-green-red colormap on [0, 1]."""
import numpy as np

from ..const import COLORMAP_STOPS

_POSITIONS = np.array([stop for stop, _ in COLORMAP_STOPS], dtype=np.float64)
_COLORS = np.array([color for _, color in COLORMAP_STOPS], dtype=np.float64)


def colormap(values) -> np.ndarray:
    """uint8 RGB of shape values.shape + (3,); inputs are clipped to [0, 1]."""
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    channels = [np.interp(values, _POSITIONS, _COLORS[:, c]) for c in range(3)]
    return np.rint(np.stack(channels, axis=-1)).astype(np.uint8)
