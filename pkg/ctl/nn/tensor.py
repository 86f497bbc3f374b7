"""Parameter tensors with gradient slots."""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..error_handler import ShapeError

DEFAULT_DTYPE = np.float32


@dataclass
class Tensor:
    """Dense array with an optional same-shape gradient buffer."""
    data: np.ndarray
    grad: Optional[np.ndarray] = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data)
        if self.grad is not None:
            self._check_grad(self.grad)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def accumulate(self, grad: np.ndarray) -> None:
        """Add a gradient contribution, allocating the buffer on first use."""
        self._check_grad(grad)
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad.astype(self.data.dtype, copy=False)

    def astype(self, dtype) -> "Tensor":
        grad = None if self.grad is None else self.grad.astype(dtype)
        return Tensor(self.data.astype(dtype), grad)

    def _check_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.data.shape:
            raise ShapeError(
                f"Gradient shape {grad.shape} does not match data shape {self.data.shape}"
            )

    @classmethod
    def zeros(cls, shape, dtype=DEFAULT_DTYPE) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype))

    @classmethod
    def ones(cls, shape, dtype=DEFAULT_DTYPE) -> "Tensor":
        return cls(np.ones(shape, dtype=dtype))

    @classmethod
    def he_normal(cls, shape, fan_in: int, rng: np.random.Generator,
                  dtype=DEFAULT_DTYPE) -> "Tensor":
        """He-normal initialization, std = sqrt(2 / fan_in)."""
        std = np.sqrt(2.0 / fan_in)
        return cls((rng.standard_normal(shape) * std).astype(dtype))
