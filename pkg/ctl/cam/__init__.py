"""Class activation maps and colormapped image output."""
from ..data.imageio import read_ppm, write_ppm
from .cam import (
    ActivationMap,
    activation_map,
    class_activation,
    compute_cam,
    emit_overlay,
    interior,
)
from .colormap import colormap

__all__ = [
    "ActivationMap",
    "activation_map",
    "class_activation",
    "colormap",
    "compute_cam",
    "emit_overlay",
    "interior",
    "read_ppm",
    "write_ppm",
]
