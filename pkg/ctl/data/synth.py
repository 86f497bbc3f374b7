"""Deterministic synthetic corpus of five procedural texture families."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import ndimage

from ..config import CorpusConfig
from ..const import DEFAULT_RUN_LENGTH
from ..error_handler import ConfigError, DataError
from ..nn.random import derive_stream
from .imageio import write_pgm
from .models import ClassLabel, DatasetManifest, ManifestEntry, VolumeRecord
from .windows import extract_windows, sliding_windows

_LOGGER = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
LOW_RISK_HOSTS = (ClassLabel.MI, ClassLabel.EP, ClassLabel.CY)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6 - 15) + 10)


def value_noise(height: int, width: int, scale_y: float, scale_x: float,
                rng: np.random.Generator) -> np.ndarray:
    """Smoothly interpolated lattice noise in [0, 1]; cell size may differ per axis."""
    scale_y, scale_x = max(scale_y, 1.0), max(scale_x, 1.0)
    grid = rng.random((int(np.ceil(height / scale_y)) + 2, int(np.ceil(width / scale_x)) + 2))
    ys = np.arange(height) / scale_y
    xs = np.arange(width) / scale_x
    yi, xi = np.floor(ys).astype(int), np.floor(xs).astype(int)
    fy, fx = _fade(ys - yi)[:, None], _fade(xs - xi)[None, :]
    v00 = grid[yi[:, None], xi[None, :]]
    v01 = grid[yi[:, None], xi[None, :] + 1]
    v10 = grid[yi[:, None] + 1, xi[None, :]]
    v11 = grid[yi[:, None] + 1, xi[None, :] + 1]
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    return top + fy * (bottom - top)


def fbm(height: int, width: int, rng: np.random.Generator, base_scale: float = 16.0,
        octaves: int = 4, persistence: float = 0.5, stretch: float = 1.0) -> np.ndarray:
    """Layered value noise; ``stretch`` > 1 elongates features horizontally."""
    result = np.zeros((height, width))
    amplitude, total, scale = 1.0, 0.0, base_scale
    for _ in range(octaves):
        result += amplitude * value_noise(height, width, scale, scale * stretch, rng)
        total += amplitude
        amplitude *= persistence
        scale /= 2.0
    return result / total


def _depth(height: int, decay: float) -> np.ndarray:
    return np.exp(-np.arange(height) / decay)[:, None]


def _mild_inflammation(h: int, w: int, params: Dict, rng: np.random.Generator) -> np.ndarray:
    """Smooth horizontal layering."""
    rows = np.arange(h)[:, None]
    waviness = 2.0 * fbm(1, w, rng, base_scale=24.0, octaves=2)
    layers = 0.5 + 0.3 * np.sin(2 * np.pi * (rows + waviness) / params["period"] + params["phase"])
    texture = layers + 0.15 * (fbm(h, w, rng, base_scale=6.0, stretch=4.0) - 0.5)
    return texture * (0.6 + 0.4 * _depth(h, 3.0 * h))


def _ectropion(h: int, w: int, params: Dict, rng: np.random.Generator) -> np.ndarray:
    """Bright papillary bump contours over a dim background."""
    texture = 0.25 + 0.2 * fbm(h, w, rng, base_scale=12.0)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(params["bumps"]):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        radius = rng.uniform(*params["radius"])
        distance = np.hypot(yy - cy, xx - cx)
        texture += 0.6 * np.exp(-((distance - radius) ** 2) / (2 * 1.2 ** 2))
    return texture


def _cyst(h: int, w: int, params: Dict, rng: np.random.Generator) -> np.ndarray:
    """Dark elliptical voids in a medium-bright scattering background."""
    texture = 0.55 + 0.35 * (fbm(h, w, rng, base_scale=4.0, octaves=3) - 0.5)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(params["voids"]):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        ry, rx = rng.uniform(3, 8), rng.uniform(6, 16)
        inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
        texture = np.where(inside < 1.0, 0.08 + 0.05 * inside, texture)
    return texture


def _hsil(h: int, w: int, params: Dict, rng: np.random.Generator) -> np.ndarray:
    """Vertical icicle streaks fading with depth."""
    streaks = value_noise(h, w, params["length"], params["spacing"], rng)
    tips = _depth(h, params["decay"])
    texture = 0.15 + 0.75 * streaks ** 2 * tips
    return texture + 0.08 * (fbm(h, w, rng, base_scale=3.0, octaves=2) - 0.5)


def _cancer(h: int, w: int, params: Dict, rng: np.random.Generator) -> np.ndarray:
    """Dense fine speckle with rapid intensity decay."""
    speckle = ndimage.gaussian_filter(rng.random((h, w)), sigma=params["grain"])
    speckle = (speckle - speckle.min()) / max(float(np.ptp(speckle)), 1e-12)
    return 0.05 + 0.9 * speckle * _depth(h, params["decay"])


FAMILIES: Dict[ClassLabel, Callable[..., np.ndarray]] = {
    ClassLabel.MI: _mild_inflammation,
    ClassLabel.EP: _ectropion,
    ClassLabel.CY: _cyst,
    ClassLabel.HSIL: _hsil,
    ClassLabel.CC: _cancer,
}


def patient_parameters(label: ClassLabel, rng: np.random.Generator, height: int) -> Dict:
    """Per-patient variation of a family's texture."""
    params = {"noise": rng.uniform(0.02, 0.05), "gain": rng.uniform(0.85, 1.1)}
    if label is ClassLabel.MI:
        params.update(period=rng.uniform(7.0, 12.0), phase=rng.uniform(0, 2 * np.pi))
    elif label is ClassLabel.EP:
        params.update(bumps=int(rng.integers(4, 8)), radius=(rng.uniform(4, 6), rng.uniform(8, 12)))
    elif label is ClassLabel.CY:
        params.update(voids=int(rng.integers(3, 7)))
    elif label is ClassLabel.HSIL:
        params.update(length=rng.uniform(10, 18), spacing=rng.uniform(2.0, 3.5),
                      decay=rng.uniform(0.6, 1.0) * height)
    else:
        params.update(grain=rng.uniform(0.6, 1.0), decay=rng.uniform(0.2, 0.35) * height)
    return params


def render_frame(label: ClassLabel, params: Dict, height: int, width: int,
                 rng: np.random.Generator) -> np.ndarray:
    """One 8-bit frame of a texture family."""
    texture = FAMILIES[label](height, width, params, rng) * params["gain"]
    texture = texture + rng.normal(0.0, params["noise"], texture.shape)
    return np.rint(np.clip(texture, 0.0, 1.0) * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class VolumeRequest:
    """Everything needed to render one volume independently."""
    seed: int
    label: ClassLabel
    patient_number: int
    frames: int
    height: int
    width: int
    lesion_region: Optional[Tuple[int, int, int, int]] = None

    @property
    def patient_id(self) -> str:
        if self.lesion_region is not None:
            return f"L{self.patient_number:03d}{self.label.value}"
        return f"{self.label.value}{self.patient_number:03d}"

    @property
    def volume_id(self) -> str:
        return f"V{self.patient_id}"


def render_volume(request: VolumeRequest) -> List[np.ndarray]:
    """Frames of one volume; a pure function of the request."""
    stream = "lesion_patient" if request.lesion_region is not None else "patient"
    params = patient_parameters(
        request.label,
        derive_stream(request.seed, stream, request.label.index, request.patient_number),
        request.height,
    )
    frames = []
    for index in range(request.frames):
        rng = derive_stream(request.seed, stream + ".frame", request.label.index,
                            request.patient_number, index)
        frames.append(render_frame(request.label, params, request.height, request.width, rng))
    if request.lesion_region is not None:
        _implant(request, frames)
    return frames


def _implant(request: VolumeRequest, frames: List[np.ndarray]) -> None:
    first, stop, left, right = request.lesion_region
    params = patient_parameters(
        ClassLabel.HSIL,
        derive_stream(request.seed, "lesion", request.patient_number),
        request.height,
    )
    for index in range(first, stop):
        rng = derive_stream(request.seed, "lesion.frame", request.patient_number, index)
        lesion = render_frame(ClassLabel.HSIL, params, request.height, right - left, rng)
        frames[index][:, left:right] = lesion


def lesion_region(frames: int, frame_width: int, patch_size: int, stride: int,
                  run_length: int = DEFAULT_RUN_LENGTH) -> Tuple[int, int, int, int]:
    """Central block of run_length frames by run_length windows."""
    offsets = sliding_windows(frame_width, patch_size, stride)
    if frames < run_length or len(offsets) < run_length:
        raise DataError(
            f"A lesion needs {run_length} frames and {run_length} windows, volume has "
            f"{frames} frames and {len(offsets)} windows"
        )
    first = (frames - run_length) // 2
    window = (len(offsets) - run_length) // 2
    return first, first + run_length, offsets[window], offsets[window + run_length - 1] + patch_size


def _volume_requests(seed: int, config: CorpusConfig, stride: int) -> List[VolumeRequest]:
    requests = [
        VolumeRequest(seed, label, number, config.frames_per_volume,
                      config.patch_size, config.frame_width)
        for label in ClassLabel
        for number in range(config.patients_per_class)
    ]
    if config.lesion_volumes:
        region = lesion_region(config.frames_per_volume, config.frame_width,
                               config.patch_size, stride)
        requests.extend(
            VolumeRequest(seed, LOW_RISK_HOSTS[k % len(LOW_RISK_HOSTS)], k,
                          config.frames_per_volume, config.patch_size, config.frame_width,
                          lesion_region=region)
            for k in range(config.lesion_volumes)
        )
    return requests


def generate_corpus(seed: int, out_dir: Path, config: Optional[CorpusConfig] = None,
                    jobs: int = 1) -> DatasetManifest:
    """Render every volume, slice frames into patches and write the manifest.

    Lesion volumes get frame images and a volume record but no patch entries.
    """
    config = config or CorpusConfig()
    try:
        config.validate()
    except ConfigError as e:
        raise DataError(str(e)) from e
    out_dir = Path(out_dir)
    stride = config.stride or max(1, config.patch_size // 2)
    offsets = sliding_windows(config.frame_width, config.patch_size, stride)
    requests = _volume_requests(seed, config, stride)
    if jobs > 1:
        rendered = Parallel(n_jobs=jobs)(delayed(render_volume)(r) for r in requests)
    else:
        rendered = [render_volume(r) for r in requests]

    (out_dir / "patches").mkdir(parents=True, exist_ok=True)
    entries: List[ManifestEntry] = []
    volumes: Dict[str, VolumeRecord] = {}
    for request, frames in zip(requests, rendered):
        volume_dir = out_dir / "volumes" / request.volume_id
        volume_dir.mkdir(parents=True, exist_ok=True)
        frame_paths = []
        for frame_index, frame in enumerate(frames):
            frame_path = f"volumes/{request.volume_id}/frame_{frame_index:03d}.pgm"
            write_pgm(out_dir / frame_path, frame)
            frame_paths.append(frame_path)
            if request.lesion_region is not None:
                continue
            for patch_index, patch in enumerate(
                extract_windows(frame, config.patch_size, stride)
            ):
                entry = ManifestEntry(
                    patient_id=request.patient_id,
                    volume_id=request.volume_id,
                    frame_index=frame_index,
                    patch_index=patch_index,
                    image_path=(f"patches/{request.volume_id}_F{frame_index:03d}"
                                f"_P{patch_index:02d}.pgm"),
                    label=request.label,
                )
                write_pgm(out_dir / entry.image_path, patch)
                entries.append(entry)
        volumes[request.volume_id] = VolumeRecord(
            volume_id=request.volume_id,
            patient_id=request.patient_id,
            label=request.label,
            frame_paths=tuple(frame_paths),
            lesion_region=request.lesion_region,
        )

    manifest = DatasetManifest(
        entries=entries,
        generator_seed=seed,
        patch_size=config.patch_size,
        frame_width=config.frame_width,
        window_stride=stride,
        volumes=volumes,
        root=out_dir,
    )
    manifest.save(out_dir / MANIFEST_NAME)
    _LOGGER.info("Generated %s volumes, %s patches (%s windows per frame)",
                 len(volumes), len(entries), len(offsets))
    return manifest
