"""Data models for corpora, manifests and splits."""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..const import CLASS_INDEX_MAP, CLASS_NAMES, RISK_HIGH, RISK_MAP
from ..error_handler import DataError, SplitError

_LOGGER = logging.getLogger(__name__)


class ClassLabel(str, Enum):
    """Five-class tissue label."""
    MI = "MI"
    EP = "EP"
    CY = "CY"
    HSIL = "HSIL"
    CC = "CC"

    @property
    def index(self) -> int:
        return CLASS_INDEX_MAP[self.value]

    @property
    def risk_group(self) -> str:
        return RISK_MAP[self.value]

    @property
    def high_risk(self) -> bool:
        return self.risk_group == RISK_HIGH

    @classmethod
    def from_index(cls, index: int) -> "ClassLabel":
        return cls(CLASS_NAMES[index])


@dataclass(frozen=True)
class ManifestEntry:
    """One patch: where it comes from, where it lives and what it shows."""
    patient_id: str
    volume_id: str
    frame_index: int
    patch_index: int
    image_path: str
    label: ClassLabel

    @property
    def uid(self) -> str:
        """Unique patch identifier."""
        return f"{self.volume_id}_F{self.frame_index}_P{self.patch_index}"

    @property
    def key(self) -> Tuple[str, int, int]:
        return self.volume_id, self.frame_index, self.patch_index

    def to_dict(self) -> Dict[str, Any]:
        return {
            "patient_id": self.patient_id,
            "volume_id": self.volume_id,
            "frame_index": self.frame_index,
            "patch_index": self.patch_index,
            "image_path": self.image_path,
            "label": self.label.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ManifestEntry":
        try:
            return cls(
                patient_id=str(data["patient_id"]),
                volume_id=str(data["volume_id"]),
                frame_index=int(data["frame_index"]),
                patch_index=int(data["patch_index"]),
                image_path=str(data["image_path"]),
                label=ClassLabel(data["label"]),
            )
        except (KeyError, ValueError) as e:
            raise DataError(f"Invalid manifest entry {data!r}: {e}") from e


@dataclass(frozen=True)
class VolumeRecord:
    """Ordered frame images of one volume.

    ``lesion_region`` is (first frame, stop frame, first column, stop column) of an
    implanted high-risk region, if any.
    """
    volume_id: str
    patient_id: str
    label: ClassLabel
    frame_paths: Tuple[str, ...]
    lesion_region: Optional[Tuple[int, int, int, int]] = None

    @property
    def lesion(self) -> bool:
        return self.lesion_region is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "volume_id": self.volume_id,
            "patient_id": self.patient_id,
            "label": self.label.value,
            "frame_paths": list(self.frame_paths),
            "lesion_region": None if self.lesion_region is None else list(self.lesion_region),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VolumeRecord":
        region = data.get("lesion_region")
        return cls(
            volume_id=str(data["volume_id"]),
            patient_id=str(data["patient_id"]),
            label=ClassLabel(data["label"]),
            frame_paths=tuple(data.get("frame_paths", [])),
            lesion_region=None if region is None else tuple(int(v) for v in region),
        )


@dataclass
class DatasetManifest:
    """Patients, volumes, frames and patches of a corpus."""
    entries: List[ManifestEntry]
    generator_seed: Optional[int] = None
    patch_size: int = 0
    frame_width: int = 0
    window_stride: int = 0
    volumes: Dict[str, VolumeRecord] = field(default_factory=dict)
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen = set()
        volume_owner: Dict[str, Tuple[str, ClassLabel]] = {}
        for entry in self.entries:
            if entry.key in seen:
                raise DataError(f"Duplicate patch {entry.uid}")
            seen.add(entry.key)
            owner = (entry.patient_id, entry.label)
            if volume_owner.setdefault(entry.volume_id, owner) != owner:
                raise DataError(
                    f"Volume {entry.volume_id} maps to more than one patient or label"
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def patient_ids(self) -> List[str]:
        return sorted({e.patient_id for e in self.entries})

    def patient_labels(self) -> Dict[str, ClassLabel]:
        """First label seen per patient."""
        labels: Dict[str, ClassLabel] = {}
        for entry in self.entries:
            labels.setdefault(entry.patient_id, entry.label)
        return labels

    def class_counts(self) -> Dict[ClassLabel, int]:
        return dict(Counter(e.label for e in self.entries))

    def entries_for(self, patient_ids: Iterable[str]) -> List[ManifestEntry]:
        wanted = set(patient_ids)
        return [e for e in self.entries if e.patient_id in wanted]

    def resolve(self, image_path: str) -> Path:
        """Absolute location of a manifest-relative path."""
        path = Path(image_path)
        return path if path.is_absolute() else self.root / path

    def subset(self, entries: Sequence[ManifestEntry]) -> "DatasetManifest":
        return DatasetManifest(
            entries=list(entries),
            generator_seed=self.generator_seed,
            patch_size=self.patch_size,
            frame_width=self.frame_width,
            window_stride=self.window_stride,
            volumes=self.volumes,
            root=self.root,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "generator_seed": self.generator_seed,
            "patch_size": self.patch_size,
            "frame_width": self.frame_width,
            "window_stride": self.window_stride,
            "entries": [e.to_dict() for e in self.entries],
            "volumes": [v.to_dict() for v in self.volumes.values()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], root: Path = Path()) -> "DatasetManifest":
        """Create from manifest JSON data."""
        volumes = [VolumeRecord.from_dict(v) for v in data.get("volumes", [])]
        return cls(
            entries=[ManifestEntry.from_dict(e) for e in data.get("entries", [])],
            generator_seed=data.get("generator_seed"),
            patch_size=int(data.get("patch_size", 0)),
            frame_width=int(data.get("frame_width", 0)),
            window_stride=int(data.get("window_stride", 0)),
            volumes={v.volume_id: v for v in volumes},
            root=Path(root),
        )

    def save(self, path: Path) -> None:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        _LOGGER.info("Wrote manifest with %s patches to %s", len(self.entries), path)

    @classmethod
    def load(cls, path: Path) -> "DatasetManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"Cannot read manifest {path}: {e}") from e
        return cls.from_dict(data, root=path.parent)


@dataclass
class SplitPlan:
    """Patient-level train/test split with cross-validation folds over training patients."""
    train_patient_ids: List[str]
    test_patient_ids: List[str]
    folds: List[Tuple[List[str], List[str]]] = field(default_factory=list)

    def validate(self) -> "SplitPlan":
        train, test = set(self.train_patient_ids), set(self.test_patient_ids)
        if train & test:
            raise SplitError(f"Patients on both sides of the split: {sorted(train & test)}")
        covered: List[str] = []
        for fold_train, fold_val in self.folds:
            if set(fold_train) & set(fold_val):
                raise SplitError("A fold shares patients between training and validation")
            if set(fold_train) | set(fold_val) != train:
                raise SplitError("A fold does not cover exactly the training patients")
            covered.extend(fold_val)
        if self.folds and sorted(covered) != sorted(train):
            raise SplitError("Validation folds do not partition the training patients")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "train_patient_ids": list(self.train_patient_ids),
            "test_patient_ids": list(self.test_patient_ids),
            "folds": [{"train": list(t), "validation": list(v)} for t, v in self.folds],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SplitPlan":
        return cls(
            train_patient_ids=list(data.get("train_patient_ids", [])),
            test_patient_ids=list(data.get("test_patient_ids", [])),
            folds=[(list(f["train"]), list(f["validation"])) for f in data.get("folds", [])],
        ).validate()
