"""Adam and SGD-with-momentum optimizers."""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from ..const import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    ADAM_LR,
    OPTIMIZER_ADAM,
    OPTIMIZER_SGD,
    SGD_LR,
    SGD_MOMENTUM,
)
from ..error_handler import OptimizerError
from .tensor import Tensor

_LOGGER = logging.getLogger(__name__)

_SLOTS = {OPTIMIZER_ADAM: ("m", "v"), OPTIMIZER_SGD: ("velocity",)}


@dataclass
class OptimizerState:
    """Hyperparameters, step counter and per-parameter moment buffers."""
    kind: str
    learning_rate: float
    weight_decay: float = 0.0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    momentum: float = SGD_MOMENTUM
    step_count: int = 0
    moments: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _SLOTS:
            raise OptimizerError(f"Unknown optimizer kind {self.kind!r}")

    @property
    def slots(self):
        return _SLOTS[self.kind]

    def hyper(self) -> Dict[str, Any]:
        """Scalar fields for serialization."""
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "momentum": self.momentum,
            "step_count": self.step_count,
        }

    @classmethod
    def adam(cls, learning_rate: float = ADAM_LR, weight_decay: float = 0.0,
             beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
             epsilon: float = ADAM_EPSILON) -> "OptimizerState":
        return cls(OPTIMIZER_ADAM, learning_rate, weight_decay, beta1, beta2, epsilon)

    @classmethod
    def sgd_momentum(cls, learning_rate: float = SGD_LR, momentum: float = SGD_MOMENTUM,
                     weight_decay: float = 0.0) -> "OptimizerState":
        return cls(OPTIMIZER_SGD, learning_rate, weight_decay, momentum=momentum)

    @classmethod
    def from_hyper(cls, data: Dict[str, Any]) -> "OptimizerState":
        return cls(
            kind=data["kind"],
            learning_rate=float(data["learning_rate"]),
            weight_decay=float(data.get("weight_decay", 0.0)),
            beta1=float(data.get("beta1", ADAM_BETA1)),
            beta2=float(data.get("beta2", ADAM_BETA2)),
            epsilon=float(data.get("epsilon", ADAM_EPSILON)),
            momentum=float(data.get("momentum", SGD_MOMENTUM)),
            step_count=int(data.get("step_count", 0)),
        )


def _prepare(state: OptimizerState, kind: str, params: Dict[str, np.ndarray],
             grads: Dict[str, np.ndarray]) -> None:
    """Validate shapes and allocate missing buffers before anything is mutated."""
    if state.kind != kind:
        raise OptimizerError(f"Optimizer state is {state.kind!r}, expected {kind!r}")
    for name, theta in params.items():
        if name not in grads:
            raise OptimizerError(f"No gradient for parameter {name}")
        if grads[name].shape != theta.shape:
            raise OptimizerError(
                f"Gradient of {name} has shape {grads[name].shape}, parameter {theta.shape}"
            )
        slots = state.moments.get(name)
        if slots is None:
            continue
        for slot in state.slots:
            if slots[slot].shape != theta.shape:
                raise OptimizerError(
                    f"Moment {slot} of {name} has shape {slots[slot].shape}, "
                    f"parameter {theta.shape}"
                )
    for name, theta in params.items():
        if name not in state.moments:
            state.moments[name] = {slot: np.zeros_like(theta) for slot in state.slots}


def _decay(theta: np.ndarray, state: OptimizerState) -> np.ndarray:
    # decoupled: shrink the parameter before the gradient step
    if state.weight_decay:
        return theta - state.learning_rate * state.weight_decay * theta
    return theta


def adam_step(state: OptimizerState, params: Dict[str, np.ndarray],
              grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """One bias-corrected Adam update; returns new parameter arrays."""
    _prepare(state, OPTIMIZER_ADAM, params, grads)
    t = state.step_count + 1
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    updated = {}
    for name, theta in params.items():
        g = grads[name].astype(np.float64)
        slots = state.moments[name]
        m = state.beta1 * slots["m"].astype(np.float64) + (1.0 - state.beta1) * g
        v = state.beta2 * slots["v"].astype(np.float64) + (1.0 - state.beta2) * g * g
        new = _decay(theta.astype(np.float64), state)
        new = new - state.learning_rate * (m / correction1) / (
            np.sqrt(v / correction2) + state.epsilon
        )
        slots["m"] = m.astype(theta.dtype)
        slots["v"] = v.astype(theta.dtype)
        updated[name] = new.astype(theta.dtype)
    state.step_count = t
    return updated


def sgd_momentum_step(state: OptimizerState, params: Dict[str, np.ndarray],
                      grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """v <- momentum * v - lr * g; theta <- theta + v."""
    _prepare(state, OPTIMIZER_SGD, params, grads)
    updated = {}
    for name, theta in params.items():
        slots = state.moments[name]
        velocity = (state.momentum * slots["velocity"].astype(np.float64)
                    - state.learning_rate * grads[name].astype(np.float64))
        new = _decay(theta.astype(np.float64), state) + velocity
        slots["velocity"] = velocity.astype(theta.dtype)
        updated[name] = new.astype(theta.dtype)
    state.step_count += 1
    return updated


class Optimizer(ABC):
    """Applies an update rule to named tensors in place."""

    def __init__(self, state: OptimizerState):
        self.state = state

    @abstractmethod
    def _update(self, params, grads) -> Dict[str, np.ndarray]:
        """Pure update rule."""

    def step(self, params: Dict[str, Tensor]) -> None:
        arrays = {name: t.data for name, t in params.items()}
        grads = {
            name: t.grad if t.grad is not None else np.zeros_like(t.data)
            for name, t in params.items()
        }
        for name, value in self._update(arrays, grads).items():
            params[name].data = value


class Adam(Optimizer):
    """Adam with decoupled weight decay."""

    def _update(self, params, grads):
        return adam_step(self.state, params, grads)


class SGDMomentum(Optimizer):
    """SGD with classical momentum."""

    def _update(self, params, grads):
        return sgd_momentum_step(self.state, params, grads)


def create_optimizer(state: OptimizerState) -> Optimizer:
    if state.kind == OPTIMIZER_ADAM:
        return Adam(state)
    return SGDMomentum(state)
