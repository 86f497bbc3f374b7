"""CTL-Small encoder, heads and the network container."""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..const import (
    DEFAULT_BLOCK_STRIDES,
    DEFAULT_BLOCK_WIDTHS,
    DEFAULT_INPUT_CHANNELS,
    DEFAULT_PROJECTION_HIDDEN,
    DEFAULT_PROJECTION_OUT,
    DEFAULT_STEM_WIDTH,
    HEAD_GAP_LINEAR,
    HEAD_PROJECTION,
    NUM_CLASSES,
)
from ..error_handler import BackwardError, ShapeError
from .layers import (
    BatchNorm,
    Conv2d,
    Dense,
    GlobalAvgPool,
    Layer,
    ReLU,
    ResidualBlock,
    Sequential,
    Softmax,
)
from .tensor import Tensor

_LOGGER = logging.getLogger(__name__)

ENCODER_PREFIX = "encoder."
HEAD_PREFIX = "head."


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description of an encoder and its head."""
    in_channels: int = DEFAULT_INPUT_CHANNELS
    stem_width: int = DEFAULT_STEM_WIDTH
    block_widths: Tuple[int, ...] = DEFAULT_BLOCK_WIDTHS
    block_strides: Tuple[int, ...] = DEFAULT_BLOCK_STRIDES
    head: str = HEAD_PROJECTION
    projection_hidden: int = DEFAULT_PROJECTION_HIDDEN
    projection_out: int = DEFAULT_PROJECTION_OUT
    num_classes: int = NUM_CLASSES

    def __post_init__(self):
        if len(self.block_widths) != len(self.block_strides):
            raise ShapeError("block_widths and block_strides must have equal length")
        if self.head not in (HEAD_PROJECTION, HEAD_GAP_LINEAR):
            raise ShapeError(f"Unknown head {self.head!r}")
        if min((self.stem_width,) + tuple(self.block_widths)) < 1:
            raise ShapeError("Layer widths must be positive")

    @property
    def encoder_output_dim(self) -> int:
        return self.block_widths[-1] if self.block_widths else self.stem_width

    def with_head(self, head: str) -> "NetworkSpec":
        data = self.to_dict()
        data["head"] = head
        return NetworkSpec.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["block_widths"] = list(self.block_widths)
        data["block_strides"] = list(self.block_strides)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetworkSpec":
        return cls(
            in_channels=int(data.get("in_channels", DEFAULT_INPUT_CHANNELS)),
            stem_width=int(data.get("stem_width", DEFAULT_STEM_WIDTH)),
            block_widths=tuple(int(w) for w in data.get("block_widths", DEFAULT_BLOCK_WIDTHS)),
            block_strides=tuple(int(s) for s in data.get("block_strides", DEFAULT_BLOCK_STRIDES)),
            head=data.get("head", HEAD_PROJECTION),
            projection_hidden=int(data.get("projection_hidden", DEFAULT_PROJECTION_HIDDEN)),
            projection_out=int(data.get("projection_out", DEFAULT_PROJECTION_OUT)),
            num_classes=int(data.get("num_classes", NUM_CLASSES)),
        )


def build_encoder(spec: NetworkSpec, rng: np.random.Generator) -> Sequential:
    """Stem conv/BN/ReLU followed by residual blocks; output stays NCHW."""
    layers: list = [
        Conv2d("encoder.stem.conv", spec.in_channels, spec.stem_width, 3, rng, padding=1),
        BatchNorm("encoder.stem.bn", spec.stem_width),
        ReLU("encoder.stem.relu"),
    ]
    channels = spec.stem_width
    for index, (width, stride) in enumerate(zip(spec.block_widths, spec.block_strides), 1):
        layers.append(ResidualBlock(f"encoder.block{index}", channels, width, stride, rng))
        channels = width
    return Sequential("encoder", layers)


def build_head(spec: NetworkSpec, rng: np.random.Generator) -> Sequential:
    dim = spec.encoder_output_dim
    if spec.head == HEAD_PROJECTION:
        return Sequential("head", [
            Dense("head.fc1", dim, spec.projection_hidden, rng),
            ReLU("head.relu"),
            Dense("head.fc2", spec.projection_hidden, spec.projection_out, rng),
        ])
    return Sequential("head", [
        Dense("head.fc", dim, spec.num_classes, rng),
        Softmax("head.softmax"),
    ])


class Network:
    """Encoder, global average pooling and a projection or classification head."""

    def __init__(self, spec: NetworkSpec, encoder: Sequential, head: Sequential):
        self.spec = spec
        self.encoder = encoder
        self.pool = GlobalAvgPool("pool")
        self.head = head
        self.freeze_encoder = False
        self.features: Optional[np.ndarray] = None
        self.logits: Optional[np.ndarray] = None
        self._forward_done = False

    @property
    def dtype(self):
        return next(iter(self.parameters().values())).dtype

    @property
    def classifier(self) -> Optional[Dense]:
        """Dense layer feeding the softmax of a GAP + linear head."""
        if self.spec.head != HEAD_GAP_LINEAR:
            return None
        return self.head.layers[0]

    def parameters(self) -> Dict[str, Tensor]:
        params = dict(self.encoder.parameters())
        params.update(self.head.parameters())
        return params

    def buffers(self) -> Dict[str, Tensor]:
        return dict(self.encoder.buffers())

    def trainable_parameters(self) -> Dict[str, Tensor]:
        params = self.parameters()
        if self.freeze_encoder:
            return {k: v for k, v in params.items() if not k.startswith(ENCODER_PREFIX)}
        return params

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def astype(self, dtype) -> "Network":
        self.encoder.astype(dtype)
        self.head.astype(dtype)
        return self

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        """Run encoder, pooling and head; returns embeddings or class probabilities."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ShapeError(
                f"Network expects (N, {self.spec.in_channels}, H, W) input, got {x.shape}"
            )
        encoder_training = training and not self.freeze_encoder
        self.features = self.encoder.forward(x, encoder_training)
        h = self.pool.forward(self.features, training)
        out = h
        self.logits = None
        for layer in self.head.layers:
            if isinstance(layer, Layer) and layer.kind == "softmax":
                self.logits = out
            out = layer.forward(out, training)
        self._forward_done = True
        return out

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Pooled encoder features in inference mode."""
        x = np.asarray(x, dtype=self.dtype)
        return self.pool.forward(self.encoder.forward(x, False), False)

    def backward(self, grad_output: np.ndarray) -> Optional[np.ndarray]:
        """Back-propagate d(loss)/d(output); returns d(loss)/d(input).

        Parameter gradients are reset first, so parameters off the gradient path end
        with zero gradients.
        """
        if not self._forward_done:
            raise BackwardError("backward called before forward")
        self.zero_grad()
        grad = self.head.backward(np.asarray(grad_output, dtype=self.dtype))
        grad = self.pool.backward(grad)
        if self.freeze_encoder:
            return None
        return self.encoder.backward(grad)

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Parameters and buffers as named arrays (copies)."""
        state = {name: t.data.copy() for name, t in self.parameters().items()}
        state.update({name: t.data.copy() for name, t in self.buffers().items()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray], prefix: str = "",
                        strict: bool = True) -> None:
        """Copy named arrays into matching tensors; shapes must agree."""
        targets = {**self.parameters(), **self.buffers()}
        targets = {k: v for k, v in targets.items() if k.startswith(prefix)}
        missing = [k for k in targets if k not in state]
        if strict and missing:
            raise ShapeError(f"State is missing tensors: {', '.join(sorted(missing)[:5])}")
        updates = {}
        for name, tensor in targets.items():
            if name not in state:
                continue
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                raise ShapeError(
                    f"Tensor {name} has shape {tensor.shape}, state holds {value.shape}"
                )
            updates[name] = value
        for name, value in updates.items():
            targets[name].data = value.astype(targets[name].dtype, copy=True)


def backward(network: Network, loss_grad: np.ndarray) -> Dict[str, np.ndarray]:
    """Gradients of every parameter given d(loss)/d(network output)."""
    network.backward(loss_grad)
    return {name: t.grad for name, t in network.parameters().items()}
