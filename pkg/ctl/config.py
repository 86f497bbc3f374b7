"""Configuration classes for contrastive texture learning."""
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import voluptuous as vol

from .const import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    ADAM_LR,
    ADAM_WEIGHT_DECAY,
    DEFAULT_BATCH_SIZE,
    DEFAULT_FINETUNE_EPOCHS,
    DEFAULT_FRAME_WIDTH,
    DEFAULT_FRAMES_PER_VOLUME,
    DEFAULT_LBP_P,
    DEFAULT_LBP_R,
    DEFAULT_PATCH_SIZE,
    DEFAULT_PATIENTS_PER_CLASS,
    DEFAULT_PRETRAIN_EPOCHS,
    DEFAULT_RUN_LENGTH,
    DEFAULT_TEMPERATURE,
    DEFAULT_VOTE_THRESHOLD,
    INIT_CHECKPOINT,
    INIT_RANDOM,
    LBP_MAX_P,
    LBP_MIN_P,
    SGD_LR,
    SGD_MOMENTUM,
)
from .error_handler import ConfigError


@dataclass(frozen=True)
class LbpConfig:
    """Circular LBP sampling configuration."""
    p: int = DEFAULT_LBP_P
    r: float = DEFAULT_LBP_R
    interpolation: str = "bilinear"

    @property
    def margin(self) -> int:
        """Border pixels excluded on every side."""
        return int(math.ceil(self.r))

    def validate(self) -> "LbpConfig":
        if not LBP_MIN_P <= self.p <= LBP_MAX_P:
            raise ConfigError(f"LBP P must lie in [{LBP_MIN_P}, {LBP_MAX_P}], got {self.p}")
        if not self.r > 0:
            raise ConfigError(f"LBP R must be positive, got {self.r}")
        if self.interpolation != "bilinear":
            raise ConfigError(f"Unsupported interpolation {self.interpolation!r}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LbpConfig":
        """Create configuration from a config dictionary."""
        return cls(
            p=int(data.get("p", DEFAULT_LBP_P)),
            r=float(data.get("r", DEFAULT_LBP_R)),
            interpolation=data.get("interpolation", "bilinear"),
        )


@dataclass(frozen=True)
class AugmentConfig:
    """Texture-map augmentation switches."""
    horizontal_flip: bool = True
    vertical_flip: bool = True
    rotate90: bool = True
    free_rotation: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AugmentConfig":
        return cls(
            horizontal_flip=bool(data.get("horizontal_flip", True)),
            vertical_flip=bool(data.get("vertical_flip", True)),
            rotate90=bool(data.get("rotate90", True)),
            free_rotation=bool(data.get("free_rotation", False)),
        )


@dataclass(frozen=True)
class PretrainConfig:
    """Contrastive pretraining configuration."""
    temperature: float = DEFAULT_TEMPERATURE
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_PRETRAIN_EPOCHS
    learning_rate: float = ADAM_LR
    weight_decay: float = ADAM_WEIGHT_DECAY
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def validate(self) -> "PretrainConfig":
        if not self.temperature > 0:
            raise ConfigError(f"Temperature must be positive, got {self.temperature}")
        if self.batch_size < 2:
            raise ConfigError(f"Contrastive batch size must be >= 2, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"Epoch count must be >= 0, got {self.epochs}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PretrainConfig":
        return cls(
            temperature=float(data.get("temperature", DEFAULT_TEMPERATURE)),
            batch_size=int(data.get("batch_size", DEFAULT_BATCH_SIZE)),
            epochs=int(data.get("epochs", DEFAULT_PRETRAIN_EPOCHS)),
            learning_rate=float(data.get("learning_rate", ADAM_LR)),
            weight_decay=float(data.get("weight_decay", ADAM_WEIGHT_DECAY)),
            beta1=float(data.get("beta1", ADAM_BETA1)),
            beta2=float(data.get("beta2", ADAM_BETA2)),
            epsilon=float(data.get("epsilon", ADAM_EPSILON)),
            augment=AugmentConfig.from_dict(data.get("augment", {})),
        )


@dataclass(frozen=True)
class FinetuneConfig:
    """Downstream fine-tuning configuration."""
    epochs: int = DEFAULT_FINETUNE_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = SGD_LR
    momentum: float = SGD_MOMENTUM
    weight_decay: float = 0.0
    label_fraction: float = 1.0
    init: str = INIT_RANDOM
    freeze_encoder: bool = False

    def validate(self) -> "FinetuneConfig":
        if not 0.0 < self.label_fraction <= 1.0:
            raise ConfigError(f"Label fraction must lie in (0, 1], got {self.label_fraction}")
        if self.init not in (INIT_RANDOM, INIT_CHECKPOINT):
            raise ConfigError(f"Unknown init {self.init!r}")
        if self.batch_size < 2:
            raise ConfigError(f"Batch size must be >= 2, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"Epoch count must be >= 0, got {self.epochs}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FinetuneConfig":
        return cls(
            epochs=int(data.get("epochs", DEFAULT_FINETUNE_EPOCHS)),
            batch_size=int(data.get("batch_size", DEFAULT_BATCH_SIZE)),
            learning_rate=float(data.get("learning_rate", SGD_LR)),
            momentum=float(data.get("momentum", SGD_MOMENTUM)),
            weight_decay=float(data.get("weight_decay", 0.0)),
            label_fraction=float(data.get("label_fraction", 1.0)),
            init=data.get("init", INIT_RANDOM),
            freeze_encoder=bool(data.get("freeze_encoder", False)),
        )


@dataclass(frozen=True)
class VoteConfig:
    """Cross-shaped threshold voting configuration."""
    threshold: float = DEFAULT_VOTE_THRESHOLD
    run_length: int = DEFAULT_RUN_LENGTH

    def validate(self) -> "VoteConfig":
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"Vote threshold must lie in (0, 1), got {self.threshold}")
        if self.run_length < 2:
            raise ConfigError(f"Run length must be >= 2, got {self.run_length}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VoteConfig":
        return cls(
            threshold=float(data.get("threshold", DEFAULT_VOTE_THRESHOLD)),
            run_length=int(data.get("run_length", DEFAULT_RUN_LENGTH)),
        )


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window patch extraction along the frame width."""
    patch_size: int = DEFAULT_PATCH_SIZE
    stride: Optional[int] = None

    @property
    def effective_stride(self) -> int:
        """Half-patch stride unless configured."""
        return self.stride if self.stride else max(1, self.patch_size // 2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WindowConfig":
        stride = data.get("stride")
        return cls(
            patch_size=int(data.get("patch_size", DEFAULT_PATCH_SIZE)),
            stride=int(stride) if stride else None,
        )


@dataclass(frozen=True)
class CorpusConfig:
    """Synthetic corpus sizes."""
    patients_per_class: int = DEFAULT_PATIENTS_PER_CLASS
    frames_per_volume: int = DEFAULT_FRAMES_PER_VOLUME
    frame_width: int = DEFAULT_FRAME_WIDTH
    patch_size: int = DEFAULT_PATCH_SIZE
    stride: Optional[int] = None
    lesion_volumes: int = 0

    def validate(self) -> "CorpusConfig":
        if self.patients_per_class < 1:
            raise ConfigError("patients_per_class must be >= 1")
        if self.frames_per_volume < 1:
            raise ConfigError("frames_per_volume must be >= 1")
        if self.patch_size > self.frame_width:
            raise ConfigError("patch_size must not exceed frame_width")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CorpusConfig":
        stride = data.get("stride")
        return cls(
            patients_per_class=int(data.get("patients_per_class", DEFAULT_PATIENTS_PER_CLASS)),
            frames_per_volume=int(data.get("frames_per_volume", DEFAULT_FRAMES_PER_VOLUME)),
            frame_width=int(data.get("frame_width", DEFAULT_FRAME_WIDTH)),
            patch_size=int(data.get("patch_size", DEFAULT_PATCH_SIZE)),
            stride=int(stride) if stride else None,
            lesion_volumes=int(data.get("lesion_volumes", 0)),
        )


_SECTION = vol.Schema({}, extra=vol.ALLOW_EXTRA)

RUN_CONFIG_SCHEMA = vol.Schema({
    vol.Optional("command"): str,
    vol.Optional("seed"): vol.All(vol.Coerce(int), vol.Range(min=0)),
    vol.Optional("jobs"): vol.All(vol.Coerce(int), vol.Range(min=1)),
    vol.Optional("lbp"): vol.Schema({
        vol.Optional("p"): vol.All(vol.Coerce(int), vol.Range(LBP_MIN_P, LBP_MAX_P)),
        vol.Optional("r"): vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False)),
        vol.Optional("interpolation"): vol.In(["bilinear"]),
    }),
    vol.Optional("pretrain"): _SECTION,
    vol.Optional("finetune"): _SECTION,
    vol.Optional("vote"): vol.Schema({
        vol.Optional("threshold"): vol.Coerce(float),
        vol.Optional("run_length"): vol.All(vol.Coerce(int), vol.Range(min=2)),
    }),
    vol.Optional("window"): _SECTION,
    vol.Optional("corpus"): _SECTION,
    vol.Optional("paths"): vol.Schema({str: vol.Any(str, None)}),
    vol.Optional("options"): _SECTION,
})


@dataclass
class RunConfig:
    """Fully resolved configuration of one command invocation."""
    command: str = ""
    seed: int = 0
    jobs: int = 1
    lbp: LbpConfig = field(default_factory=LbpConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    vote: VoteConfig = field(default_factory=VoteConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    paths: Dict[str, Optional[str]] = field(default_factory=dict)
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Create configuration from a (validated) dictionary."""
        try:
            data = RUN_CONFIG_SCHEMA(data)
        except vol.Invalid as e:
            raise ConfigError(f"Invalid run configuration: {e}") from e
        return cls(
            command=data.get("command", ""),
            seed=int(data.get("seed", 0)),
            jobs=int(data.get("jobs", 1)),
            lbp=LbpConfig.from_dict(data.get("lbp", {})),
            pretrain=PretrainConfig.from_dict(data.get("pretrain", {})),
            finetune=FinetuneConfig.from_dict(data.get("finetune", {})),
            vote=VoteConfig.from_dict(data.get("vote", {})),
            window=WindowConfig.from_dict(data.get("window", {})),
            corpus=CorpusConfig.from_dict(data.get("corpus", {})),
            paths=dict(data.get("paths", {})),
            options=dict(data.get("options", {})),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Read a JSON config file."""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        return cls.from_dict(data)

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def merge_config(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively overlay non-None override values on a config dictionary."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged
