"""Versioned binary checkpoints of network parameters and optimizer state.

Layout: magic ``CTLK``, u32 version, u32 blob count, then per blob a u32 name length,
the UTF-8 name, u32 rank, rank u64 dimensions and the raw little-endian float32
payload. A u32 CRC-32 of everything before it closes the file. The first blob,
``__meta__``, holds space-padded UTF-8 JSON reinterpreted as float32 words.
"""
import json
import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..const import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_META_BLOB,
    CHECKPOINT_VERSION,
)
from ..error_handler import CheckpointError, ShapeError
from .network import Network, NetworkSpec
from .optim import OptimizerState

_LOGGER = logging.getLogger(__name__)

OPTIMIZER_PREFIX = "optimizer/"

CODE_BAD_MAGIC = "bad_magic"
CODE_VERSION = "version_mismatch"
CODE_TRUNCATED = "truncated"
CODE_CRC = "crc_mismatch"
CODE_ARCHITECTURE = "architecture_mismatch"

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass
class ModelCheckpoint:
    """Named float32 parameter blobs plus optional optimizer state and seed."""
    blobs: Dict[str, np.ndarray]
    seed: int = 0
    optimizer: Optional[OptimizerState] = None
    meta: Dict[str, Any] = field(default_factory=dict)
    format_version: int = CHECKPOINT_VERSION

    @property
    def network_spec(self) -> NetworkSpec:
        if "network" not in self.meta:
            raise CheckpointError("Checkpoint carries no network description",
                                  code=CODE_ARCHITECTURE)
        return NetworkSpec.from_dict(self.meta["network"])

    @property
    def role(self) -> Optional[str]:
        return self.meta.get("role")

    @classmethod
    def from_network(cls, network: Network, seed: int, role: str,
                     optimizer: Optional[OptimizerState] = None,
                     **extra: Any) -> "ModelCheckpoint":
        blobs = {name: value.astype(np.float32) for name, value in network.state_dict().items()}
        meta = {"role": role, "network": network.spec.to_dict()}
        meta.update(extra)
        return cls(blobs=blobs, seed=seed, optimizer=optimizer, meta=meta)

    def apply(self, network: Network, prefix: str = "", strict: bool = True) -> None:
        """Load blobs whose names start with ``prefix`` into the network."""
        try:
            network.load_state_dict(self.blobs, prefix=prefix, strict=strict)
        except ShapeError as e:
            raise CheckpointError(str(e), code=CODE_ARCHITECTURE) from e

    def save(self, path: Path) -> None:
        checkpoint_save(self, path)

    @classmethod
    def load(cls, path: Path) -> "ModelCheckpoint":
        return checkpoint_load(path)


def _meta_payload(checkpoint: ModelCheckpoint) -> np.ndarray:
    meta = dict(checkpoint.meta)
    meta["seed"] = int(checkpoint.seed)
    meta["optimizer"] = None if checkpoint.optimizer is None else checkpoint.optimizer.hyper()
    raw = json.dumps(meta, sort_keys=True).encode("utf-8")
    raw += b" " * (-len(raw) % 4)
    return np.frombuffer(raw, dtype="<f4")


def _all_blobs(checkpoint: ModelCheckpoint) -> Dict[str, np.ndarray]:
    blobs = {CHECKPOINT_META_BLOB: _meta_payload(checkpoint)}
    blobs.update(checkpoint.blobs)
    if checkpoint.optimizer is not None:
        for name in sorted(checkpoint.optimizer.moments):
            for slot, value in checkpoint.optimizer.moments[name].items():
                blobs[f"{OPTIMIZER_PREFIX}{name}/{slot}"] = value
    return blobs


def checkpoint_to_bytes(checkpoint: ModelCheckpoint) -> bytes:
    blobs = _all_blobs(checkpoint)
    parts = [CHECKPOINT_MAGIC, _U32.pack(checkpoint.format_version), _U32.pack(len(blobs))]
    for name, value in blobs.items():
        encoded = name.encode("utf-8")
        array = np.ascontiguousarray(value, dtype="<f4")
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_U32.pack(array.ndim))
        parts.extend(_U64.pack(dim) for dim in array.shape)
        parts.append(array.tobytes())
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


def checkpoint_save(checkpoint: ModelCheckpoint, path: Path) -> None:
    """Write a checkpoint file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_to_bytes(checkpoint))
    _LOGGER.info("Wrote checkpoint %s (%s blobs)", path, len(checkpoint.blobs))


class _Reader:
    def __init__(self, data: bytes):
        self._data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self._data):
            raise CheckpointError(
                f"Checkpoint ends at byte {len(self._data)}, needed {end}", code=CODE_TRUNCATED
            )
        chunk = self._data[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]


def checkpoint_from_bytes(data: bytes) -> ModelCheckpoint:
    if len(data) < len(CHECKPOINT_MAGIC):
        raise CheckpointError("Checkpoint shorter than its magic", code=CODE_TRUNCATED)
    if data[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError("Not a checkpoint file (bad magic)", code=CODE_BAD_MAGIC)
    reader = _Reader(data)
    reader.take(len(CHECKPOINT_MAGIC))
    version = reader.u32()
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Checkpoint format {version} is not supported (expected {CHECKPOINT_VERSION})",
            code=CODE_VERSION,
        )
    blobs: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        shape = tuple(reader.u64() for _ in range(reader.u32()))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        payload = reader.take(4 * count)
        blobs[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float32)
    body_end = reader.offset
    expected = reader.u32()
    if zlib.crc32(data[:body_end]) != expected:
        raise CheckpointError("Checkpoint CRC-32 mismatch", code=CODE_CRC)
    if CHECKPOINT_META_BLOB not in blobs:
        raise CheckpointError("Checkpoint has no metadata blob", code=CODE_TRUNCATED)
    meta = json.loads(blobs.pop(CHECKPOINT_META_BLOB).tobytes().decode("utf-8"))
    seed = int(meta.pop("seed", 0))
    hyper = meta.pop("optimizer", None)
    optimizer = None if hyper is None else OptimizerState.from_hyper(hyper)
    params = {}
    for name, value in blobs.items():
        if name.startswith(OPTIMIZER_PREFIX) and optimizer is not None:
            param_name, slot = name[len(OPTIMIZER_PREFIX):].rsplit("/", 1)
            optimizer.moments.setdefault(param_name, {})[slot] = value
        else:
            params[name] = value
    return ModelCheckpoint(blobs=params, seed=seed, optimizer=optimizer, meta=meta,
                           format_version=version)


def checkpoint_load(path: Path) -> ModelCheckpoint:
    """Read and verify a checkpoint file; nothing is applied to any network."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}", code=CODE_TRUNCATED) from e
    return checkpoint_from_bytes(data)
