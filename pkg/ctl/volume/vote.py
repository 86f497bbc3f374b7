"""Cross-shaped threshold voting over per-volume patch predictions."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..cam.colormap import colormap
from ..classifier.model import predict_patches
from ..config import LbpConfig, VoteConfig, WindowConfig
from ..const import VERDICT_NEGATIVE, VERDICT_POSITIVE
from ..data.imageio import read_pgm, write_ppm
from ..data.windows import check_frames, extract_windows
from ..error_handler import ConfigError, DataError, VoteError
from ..metrics.report import high_risk_scores
from ..nn.network import Network

_LOGGER = logging.getLogger(__name__)

Cell = Tuple[int, int]
# Patches of one frame -> high-risk probability per patch
Predictor = Callable[[List[np.ndarray]], np.ndarray]


@dataclass
class PatchPredictionMatrix:
    """High-risk probabilities, rows = frames in acquisition order, columns = windows."""
    probs: np.ndarray
    volume_id: str = ""

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 1:
            raise VoteError(f"Prediction matrix must be m x n with m, n >= 1, got {probs.shape}")
        if not np.all(np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
            raise VoteError("Prediction matrix entries must lie in [0, 1]")
        self.probs = probs

    @property
    def shape(self) -> Tuple[int, int]:
        return self.probs.shape

    def to_csv(self, path: Path) -> None:
        pd.DataFrame(self.probs).to_csv(path, header=False, index=False, float_format="%.9g")

    @classmethod
    def from_csv(cls, path: Path, volume_id: str = "") -> "PatchPredictionMatrix":
        try:
            frame = pd.read_csv(path, header=None)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise VoteError(f"Cannot read prediction matrix {path}: {e}") from e
        try:
            probs = frame.to_numpy(dtype=np.float64)
        except ValueError as e:
            raise VoteError(f"{path} holds non-numeric cells") from e
        return cls(probs, volume_id or Path(path).stem)


@dataclass
class VoteResult:
    verdict: str
    witness: List[Cell] = field(default_factory=list)
    threshold: float = 0.0
    run_length: int = 0

    @property
    def positive(self) -> bool:
        return self.verdict == VERDICT_POSITIVE

    def to_dict(self) -> Dict:
        return {
            "verdict": self.verdict,
            "witness": [list(cell) for cell in self.witness],
            "threshold": self.threshold,
            "run_length": self.run_length,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _spans(line: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Start and stop of the maximal True run through each cell of a 1-D mask."""
    start = np.zeros(line.size, dtype=np.int64)
    stop = np.zeros(line.size, dtype=np.int64)
    edges = np.diff(np.concatenate(([0], line.astype(np.int8), [0])))
    for first, last in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)):
        start[first:last] = first
        stop[first:last] = last
    return start, stop


def _run_spans(mask: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    lines = mask if axis == 1 else mask.T
    starts, stops = zip(*(_spans(line) for line in lines))
    starts, stops = np.array(starts), np.array(stops)
    return (starts, stops) if axis == 1 else (starts.T, stops.T)


def cross_vote(matrix: PatchPredictionMatrix, config: VoteConfig = VoteConfig()) -> VoteResult:
    """POSITIVE iff a cell >= threshold lies in a vertical and a horizontal run of >= L.

    Runs are maximal contiguous segments of cells >= threshold. The witness is the union
    of both runs through the first qualifying cell in row-major order.
    """
    try:
        config.validate()
    except ConfigError as e:
        raise VoteError(str(e)) from e
    mask = matrix.probs >= config.threshold
    row_start, row_stop = _run_spans(mask, axis=1)
    col_start, col_stop = _run_spans(mask, axis=0)
    crosses = (mask & (row_stop - row_start >= config.run_length)
               & (col_stop - col_start >= config.run_length))
    candidates = np.argwhere(crosses)
    if not len(candidates):
        return VoteResult(VERDICT_NEGATIVE, [], config.threshold, config.run_length)
    i, j = (int(v) for v in candidates[0])
    witness = {(r, j) for r in range(col_start[i, j], col_stop[i, j])}
    witness |= {(i, c) for c in range(row_start[i, j], row_stop[i, j])}
    return VoteResult(VERDICT_POSITIVE, sorted((int(r), int(c)) for r, c in witness),
                      config.threshold, config.run_length)


def heat_matrix_image(matrix: PatchPredictionMatrix, scale: int = 1) -> np.ndarray:
    """(m * scale, n * scale, 3) colormapped cells."""
    if scale < 1:
        raise VoteError(f"Cell scale must be >= 1, got {scale}")
    rgb = colormap(matrix.probs)
    return np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)


def heat_matrix_export(matrix: PatchPredictionMatrix, csv_path: Optional[Path] = None,
                       ppm_path: Optional[Path] = None, scale: int = 1) -> np.ndarray:
    """Write the raw CSV and the colormapped PPM; returns the image."""
    image = heat_matrix_image(matrix, scale)
    if csv_path is not None:
        matrix.to_csv(csv_path)
    if ppm_path is not None:
        write_ppm(ppm_path, image)
    _LOGGER.info("Exported %sx%s heat matrix of %s", *matrix.shape,
                 matrix.volume_id or "volume")
    return image


@dataclass
class VolumePrediction:
    result: VoteResult
    matrix: PatchPredictionMatrix


def model_predictor(network: Network, lbp_config: LbpConfig, jobs: int = 1) -> Predictor:
    """High-risk probability per patch through the full classifier pipeline."""
    def predict(patches: List[np.ndarray]) -> np.ndarray:
        return high_risk_scores(predict_patches(network, patches, lbp_config, jobs))

    return predict


def predict_volume(model: Union[Network, Predictor], frames: Sequence[np.ndarray],
                   lbp_config: LbpConfig = LbpConfig(),
                   vote_config: VoteConfig = VoteConfig(),
                   window: WindowConfig = WindowConfig(),
                   volume_id: str = "", jobs: int = 1) -> VolumePrediction:
    """Slide windows over every frame, score each patch, then vote.

    ``model`` is a trained classifier or any callable mapping a frame's patches to
    high-risk probabilities.
    """
    check_frames(frames)
    predictor = model if callable(model) else model_predictor(model, lbp_config, jobs)
    rows = []
    for frame in frames:
        patches = extract_windows(frame, window.patch_size, window.effective_stride)
        scores = np.asarray(predictor(patches), dtype=np.float64)
        if scores.shape != (len(patches),):
            raise VoteError(f"Predictor returned {scores.shape} scores for {len(patches)} patches")
        rows.append(np.clip(scores, 0.0, 1.0))
    matrix = PatchPredictionMatrix(np.stack(rows), volume_id)
    result = cross_vote(matrix, vote_config)
    _LOGGER.info("Volume %s: %s over a %sx%s matrix", volume_id or "?", result.verdict,
                 *matrix.shape)
    return VolumePrediction(result, matrix)


def load_frames(directory: Path) -> List[np.ndarray]:
    """Frame images of a volume directory in file-name order."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.pgm"))
    if not paths:
        raise DataError(f"No .pgm frames in {directory}")
    return [read_pgm(path) for path in paths]
