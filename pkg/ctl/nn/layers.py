"""Layers of the numeric core: forward passes, cached activations and gradients."""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..const import BN_EPSILON, BN_MOMENTUM
from ..error_handler import BackwardError, ShapeError
from .tensor import Tensor

_LOGGER = logging.getLogger(__name__)

KIND_CONV2D = "conv2d"
KIND_BATCHNORM = "batchnorm"
KIND_DENSE = "dense"


@dataclass
class LayerParams:
    """Learnable parameters and hyperparameters of one layer."""
    kind: str
    weights: Tensor
    bias: Tensor
    running_mean: Optional[Tensor] = None
    running_var: Optional[Tensor] = None
    stride: int = 1
    padding: int = 0
    epsilon: float = BN_EPSILON
    momentum: float = BN_MOMENTUM

    def __post_init__(self):
        if self.kind == KIND_CONV2D and len(self.weights.shape) != 4:
            raise ShapeError(
                f"conv2d weight must be (out, in, kH, kW), got {self.weights.shape}"
            )
        if self.kind == KIND_BATCHNORM:
            if not self.epsilon > 0:
                raise ShapeError(f"batchnorm epsilon must be positive, got {self.epsilon}")
            if self.running_mean is None:
                self.running_mean = Tensor.zeros(self.weights.shape, self.weights.dtype)
            if self.running_var is None:
                self.running_var = Tensor.ones(self.weights.shape, self.weights.dtype)
        if self.kind == KIND_DENSE and len(self.weights.shape) != 2:
            raise ShapeError(f"dense weight must be (out, in), got {self.weights.shape}")


# Functional forms

def _im2col(x: np.ndarray, kh: int, kw: int, stride: int,
            padding: int) -> Tuple[np.ndarray, int, int]:
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    n, c, ho, wo = windows.shape[:4]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)
    return cols, ho, wo


def _check_conv(x: np.ndarray, weight: np.ndarray, stride: int, padding: int) -> None:
    if x.ndim != 4:
        raise ShapeError(f"conv2d expects NCHW input, got shape {x.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    out_ch, in_ch, kh, kw = weight.shape
    if x.shape[1] != in_ch:
        raise ShapeError(
            f"conv2d input has {x.shape[1]} channels, kernel expects {in_ch}"
        )
    if x.shape[2] + 2 * padding < kh or x.shape[3] + 2 * padding < kw:
        raise ShapeError(
            f"conv2d kernel {kh}x{kw} larger than padded input {x.shape[2:]} (padding {padding})"
        )


def conv2d_forward(x: np.ndarray, params: LayerParams, stride: Optional[int] = None,
                   padding: Optional[int] = None) -> np.ndarray:
    """Cross-correlation of an NCHW batch with (out, in, kH, kW) kernels."""
    stride = params.stride if stride is None else stride
    padding = params.padding if padding is None else padding
    out, _ = _conv2d(x, params.weights.data, params.bias.data, stride, padding)
    return out


def _conv2d(x, weight, bias, stride, padding):
    _check_conv(x, weight, stride, padding)
    out_ch, _, kh, kw = weight.shape
    cols, ho, wo = _im2col(x, kh, kw, stride, padding)
    out = cols @ weight.reshape(out_ch, -1).T + bias
    out = out.reshape(x.shape[0], ho, wo, out_ch).transpose(0, 3, 1, 2)
    return np.ascontiguousarray(out), cols


def batchnorm_forward(x: np.ndarray, params: LayerParams, training: bool) -> np.ndarray:
    """Batch normalization over every axis except channels (axis 1)."""
    out, _ = _batchnorm(x, params, training)
    return out


def _bn_axes(x: np.ndarray) -> Tuple[int, ...]:
    if x.ndim not in (2, 4):
        raise ShapeError(f"batchnorm expects (N, C) or (N, C, H, W), got {x.shape}")
    return (0,) if x.ndim == 2 else (0, 2, 3)


def _channel_view(vec: np.ndarray, ndim: int) -> np.ndarray:
    return vec.reshape((1, -1) + (1,) * (ndim - 2))


def _batchnorm(x, params: LayerParams, training: bool):
    axes = _bn_axes(x)
    if x.shape[1] != params.weights.shape[0]:
        raise ShapeError(
            f"batchnorm input has {x.shape[1]} channels, parameters have "
            f"{params.weights.shape[0]}"
        )
    if training:
        if x.shape[0] < 2:
            raise ShapeError("batchnorm in training mode needs a batch of at least 2")
        count = x.size // x.shape[1]
        mean = x.mean(axis=axes, dtype=np.float64)
        var = x.var(axis=axes, dtype=np.float64)
        momentum = params.momentum
        rm, rv = params.running_mean, params.running_var
        rm.data = ((1.0 - momentum) * rm.data + momentum * mean).astype(rm.dtype)
        rv.data = ((1.0 - momentum) * rv.data
                   + momentum * var * count / (count - 1)).astype(rv.dtype)
    else:
        mean = params.running_mean.data.astype(np.float64)
        var = params.running_var.data.astype(np.float64)
    inv_std = 1.0 / np.sqrt(var + params.epsilon)
    x_hat = ((x - _channel_view(mean, x.ndim)) * _channel_view(inv_std, x.ndim)).astype(x.dtype)
    gamma = _channel_view(params.weights.data, x.ndim)
    beta = _channel_view(params.bias.data, x.ndim)
    return gamma * x_hat + beta, (x_hat, inv_std, axes, training)


def gap_forward(x: np.ndarray) -> np.ndarray:
    """Global average pooling NCHW -> NC."""
    if x.ndim != 4 or x.shape[2] < 1 or x.shape[3] < 1:
        raise ShapeError(f"global average pooling expects NCHW with H, W >= 1, got {x.shape}")
    return x.mean(axis=(2, 3), dtype=np.float64).astype(x.dtype)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with the row maximum subtracted."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted.astype(np.float64))
    return (exp / exp.sum(axis=1, keepdims=True)).astype(logits.dtype)


# Layers

class Layer(ABC):
    """Base class for all layers."""

    kind = "layer"

    def __init__(self, name: str):
        self.name = name
        self._cache = None

    def parameters(self) -> Dict[str, Tensor]:
        """Learnable tensors keyed by dotted name."""
        return {}

    def buffers(self) -> Dict[str, Tensor]:
        """Non-learnable state tensors keyed by dotted name."""
        return {}

    @abstractmethod
    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        """Compute the output and cache what backward needs."""

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients and return the input gradient."""

    def astype(self, dtype) -> None:
        for tensor in list(self.parameters().values()) + list(self.buffers().values()):
            tensor.data = tensor.data.astype(dtype)
            if tensor.grad is not None:
                tensor.grad = tensor.grad.astype(dtype)

    def clear(self) -> None:
        self._cache = None

    def _saved(self):
        if self._cache is None:
            raise BackwardError(f"Layer {self.name} has no forward activations to differentiate")
        return self._cache


class Conv2d(Layer):
    """2-D convolution layer."""

    kind = KIND_CONV2D

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 1, padding: int = 0):
        super().__init__(name)
        fan_in = in_channels * kernel_size * kernel_size
        self.params = LayerParams(
            kind=KIND_CONV2D,
            weights=Tensor.he_normal(
                (out_channels, in_channels, kernel_size, kernel_size), fan_in, rng
            ),
            bias=Tensor.zeros((out_channels,)),
            stride=stride,
            padding=padding,
        )

    def parameters(self) -> Dict[str, Tensor]:
        return {f"{self.name}.weight": self.params.weights, f"{self.name}.bias": self.params.bias}

    def forward(self, x, training=True):
        out, cols = _conv2d(x, self.params.weights.data, self.params.bias.data,
                            self.params.stride, self.params.padding)
        self._cache = (x.shape, cols, out.shape)
        return out

    def backward(self, grad):
        x_shape, cols, out_shape = self._saved()
        if grad.shape != out_shape:
            raise ShapeError(f"{self.name}: upstream gradient {grad.shape} != output {out_shape}")
        weight = self.params.weights.data
        out_ch, in_ch, kh, kw = weight.shape
        stride, padding = self.params.stride, self.params.padding
        n, _, ho, wo = out_shape
        g = grad.transpose(0, 2, 3, 1).reshape(-1, out_ch)
        self.params.weights.accumulate((g.T @ cols).reshape(weight.shape))
        self.params.bias.accumulate(g.sum(axis=0, dtype=np.float64))
        dcols = (g @ weight.reshape(out_ch, -1)).reshape(n, ho, wo, in_ch, kh, kw)
        h, w = x_shape[2], x_shape[3]
        dx = np.zeros((n, in_ch, h + 2 * padding, w + 2 * padding), dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                dx[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += (
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        return dx[:, :, padding:padding + h, padding:padding + w]


class BatchNorm(Layer):
    """Batch normalization with running statistics for inference."""

    kind = KIND_BATCHNORM

    def __init__(self, name: str, channels: int, epsilon: float = BN_EPSILON,
                 momentum: float = BN_MOMENTUM):
        super().__init__(name)
        self.params = LayerParams(
            kind=KIND_BATCHNORM,
            weights=Tensor.ones((channels,)),
            bias=Tensor.zeros((channels,)),
            epsilon=epsilon,
            momentum=momentum,
        )

    def parameters(self) -> Dict[str, Tensor]:
        return {f"{self.name}.weight": self.params.weights, f"{self.name}.bias": self.params.bias}

    def buffers(self) -> Dict[str, Tensor]:
        return {
            f"{self.name}.running_mean": self.params.running_mean,
            f"{self.name}.running_var": self.params.running_var,
        }

    def forward(self, x, training=True):
        out, self._cache = _batchnorm(x, self.params, training)
        return out

    def backward(self, grad):
        x_hat, inv_std, axes, training = self._saved()
        g = grad.astype(np.float64)
        self.params.bias.accumulate(g.sum(axis=axes))
        self.params.weights.accumulate((g * x_hat).sum(axis=axes))
        gamma = _channel_view(self.params.weights.data.astype(np.float64), grad.ndim)
        inv = _channel_view(inv_std, grad.ndim)
        dx_hat = g * gamma
        if not training:
            return (dx_hat * inv).astype(grad.dtype)
        count = grad.size // grad.shape[1]
        sum_dx_hat = dx_hat.sum(axis=axes, keepdims=True)
        sum_dx_hat_x = (dx_hat * x_hat).sum(axis=axes, keepdims=True)
        dx = inv / count * (count * dx_hat - sum_dx_hat - x_hat * sum_dx_hat_x)
        return dx.astype(grad.dtype)


class ReLU(Layer):
    """Rectified linear unit."""

    kind = "relu"

    def forward(self, x, training=True):
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, 0).astype(x.dtype)

    def backward(self, grad):
        mask = self._saved()
        return np.where(mask, grad, 0).astype(grad.dtype)


class GlobalAvgPool(Layer):
    """Spatial mean of every feature map."""

    kind = "gap"

    def forward(self, x, training=True):
        out = gap_forward(x)
        self._cache = x.shape
        return out

    def backward(self, grad):
        n, c, h, w = self._saved()
        scaled = (grad / (h * w)).astype(grad.dtype)
        return np.ascontiguousarray(np.broadcast_to(scaled[:, :, None, None], (n, c, h, w)))


class Dense(Layer):
    """Fully connected layer y = x W^T + b."""

    kind = KIND_DENSE

    def __init__(self, name: str, in_features: int, out_features: int,
                 rng: np.random.Generator):
        super().__init__(name)
        self.params = LayerParams(
            kind=KIND_DENSE,
            weights=Tensor.he_normal((out_features, in_features), in_features, rng),
            bias=Tensor.zeros((out_features,)),
        )

    @property
    def in_features(self) -> int:
        return self.params.weights.shape[1]

    @property
    def out_features(self) -> int:
        return self.params.weights.shape[0]

    def parameters(self) -> Dict[str, Tensor]:
        return {f"{self.name}.weight": self.params.weights, f"{self.name}.bias": self.params.bias}

    def forward(self, x, training=True):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(
                f"{self.name}: expected (N, {self.in_features}) input, got {x.shape}"
            )
        self._cache = x
        return x @ self.params.weights.data.T + self.params.bias.data

    def backward(self, grad):
        x = self._saved()
        self.params.weights.accumulate(grad.T @ x)
        self.params.bias.accumulate(grad.sum(axis=0, dtype=np.float64))
        return grad @ self.params.weights.data


class Softmax(Layer):
    """Row-wise softmax."""

    kind = "softmax"

    def forward(self, x, training=True):
        out = softmax(x)
        self._cache = out
        return out

    def backward(self, grad):
        s = self._saved().astype(np.float64)
        g = grad.astype(np.float64)
        return (s * (g - (g * s).sum(axis=1, keepdims=True))).astype(grad.dtype)


class Sequential(Layer):
    """Ordered composition of layers."""

    kind = "sequential"

    def __init__(self, name: str, layers: Sequence[Layer]):
        super().__init__(name)
        self.layers: List[Layer] = list(layers)

    def __iter__(self) -> Iterator[Layer]:
        return iter(self.layers)

    def parameters(self) -> Dict[str, Tensor]:
        params = {}
        for layer in self.layers:
            params.update(layer.parameters())
        return params

    def buffers(self) -> Dict[str, Tensor]:
        buffers = {}
        for layer in self.layers:
            buffers.update(layer.buffers())
        return buffers

    def clear(self) -> None:
        for layer in self.layers:
            layer.clear()

    def forward(self, x, training=True):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad


class ResidualBlock(Layer):
    """Two 3x3 conv/BN stages with an identity or 1x1 projection shortcut."""

    kind = "residual"

    def __init__(self, name: str, in_channels: int, out_channels: int, stride: int,
                 rng: np.random.Generator):
        super().__init__(name)
        self.main = Sequential(name, [
            Conv2d(f"{name}.conv1", in_channels, out_channels, 3, rng, stride=stride, padding=1),
            BatchNorm(f"{name}.bn1", out_channels),
            ReLU(f"{name}.relu1"),
            Conv2d(f"{name}.conv2", out_channels, out_channels, 3, rng, stride=1, padding=1),
            BatchNorm(f"{name}.bn2", out_channels),
        ])
        self.shortcut: Optional[Sequential] = None
        if stride != 1 or in_channels != out_channels:
            self.shortcut = Sequential(name, [
                Conv2d(f"{name}.shortcut", in_channels, out_channels, 1, rng,
                       stride=stride, padding=0),
                BatchNorm(f"{name}.shortcut_bn", out_channels),
            ])
        self.out_relu = ReLU(f"{name}.relu_out")

    def _children(self) -> List[Layer]:
        children = [self.main, self.out_relu]
        if self.shortcut is not None:
            children.insert(1, self.shortcut)
        return children

    def parameters(self) -> Dict[str, Tensor]:
        params = {}
        for child in self._children():
            params.update(child.parameters())
        return params

    def buffers(self) -> Dict[str, Tensor]:
        buffers = {}
        for child in self._children():
            buffers.update(child.buffers())
        return buffers

    def clear(self) -> None:
        for child in self._children():
            child.clear()

    def forward(self, x, training=True):
        residual = x if self.shortcut is None else self.shortcut.forward(x, training)
        out = self.main.forward(x, training) + residual
        return self.out_relu.forward(out, training)

    def backward(self, grad):
        grad = self.out_relu.backward(grad)
        dx = self.main.backward(grad)
        if self.shortcut is None:
            return dx + grad
        return dx + self.shortcut.backward(grad)
