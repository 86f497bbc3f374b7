"""Sliding-window patch extraction along the frame width."""
from typing import List, Sequence

import numpy as np

from ..error_handler import DataError


def sliding_windows(frame_width: int, patch_size: int, stride: int) -> List[int]:
    """Left column of each window: 0, s, 2s, ... plus a right-aligned last window if needed."""
    if patch_size < 1 or stride < 1:
        raise DataError(f"Patch size and stride must be >= 1, got {patch_size}, {stride}")
    if patch_size > frame_width:
        raise DataError(f"Patch width {patch_size} exceeds frame width {frame_width}")
    last = frame_width - patch_size
    offsets = list(range(0, last + 1, stride))
    if offsets[-1] != last:
        offsets.append(last)
    return offsets


def extract_windows(frame: np.ndarray, patch_size: int, stride: int) -> List[np.ndarray]:
    """Full-height column strips of ``frame`` at the sliding-window offsets."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise DataError(f"Frames must be 2-D, got shape {frame.shape}")
    return [frame[:, offset:offset + patch_size]
            for offset in sliding_windows(frame.shape[1], patch_size, stride)]


def check_frames(frames: Sequence[np.ndarray]) -> None:
    """Reject empty volumes and frames of unequal size."""
    if not len(frames):
        raise DataError("A volume needs at least one frame")
    shapes = {np.asarray(f).shape for f in frames}
    if len(shapes) != 1:
        raise DataError(f"Frames of one volume differ in size: {sorted(shapes)}")
