"""Texture map store with per-command caching."""
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import LbpConfig
from ..error_handler import TextureError
from ..texture.lbp import extract_normalized_batch
from .imageio import read_pgm
from .models import DatasetManifest, ManifestEntry

_LOGGER = logging.getLogger(__name__)

CacheKey = Tuple[str, int, float]


class TextureSource(ABC):
    """Abstract provider of network-ready texture maps."""

    @abstractmethod
    def get_maps(self, entries: Sequence[ManifestEntry],
                 force_refresh: bool = False) -> np.ndarray:
        """(N, 1, h, w) normalized texture maps in entry order."""

    @abstractmethod
    def get_images(self, entries: Sequence[ManifestEntry]) -> List[np.ndarray]:
        """Raw patch images in entry order."""


class TextureStore(TextureSource):
    """Reads patch images of a manifest and caches their normalized LBP maps."""

    def __init__(self, manifest: DatasetManifest, config: LbpConfig, jobs: int = 1):
        self._manifest = manifest
        self._config = config
        self._jobs = jobs
        self._cache: Dict[CacheKey, np.ndarray] = {}
        self.hits = 0
        self.misses = 0

    @property
    def config(self) -> LbpConfig:
        return self._config

    @property
    def manifest(self) -> DatasetManifest:
        return self._manifest

    def _key(self, entry: ManifestEntry) -> CacheKey:
        return entry.image_path, self._config.p, float(self._config.r)

    def path(self, entry: ManifestEntry) -> Path:
        return self._manifest.resolve(entry.image_path)

    def get_images(self, entries: Sequence[ManifestEntry]) -> List[np.ndarray]:
        return [read_pgm(self.path(entry)) for entry in entries]

    def get_maps(self, entries: Sequence[ManifestEntry],
                 force_refresh: bool = False) -> np.ndarray:
        if not entries:
            raise TextureError("No entries to load")
        missing: Dict[CacheKey, ManifestEntry] = {}
        for entry in entries:
            key = self._key(entry)
            if force_refresh or key not in self._cache:
                missing.setdefault(key, entry)
        if missing:
            keys = list(missing)
            images = self.get_images([missing[k] for k in keys])
            batch = extract_normalized_batch(images, self._config, self._jobs)
            for key, texture in zip(keys, batch):
                self._cache[key] = texture
        self.misses += len(missing)
        self.hits += len(entries) - len(missing)
        _LOGGER.debug("Texture store: %s cached, %s extracted", len(entries) - len(missing),
                      len(missing))
        return np.stack([self._cache[self._key(e)] for e in entries])

    def clear(self) -> None:
        self._cache.clear()
