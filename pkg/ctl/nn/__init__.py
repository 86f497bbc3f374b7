"""Numeric core: tensors, layers, networks, optimizers and checkpoints."""
from .checkpoint import ModelCheckpoint, checkpoint_load, checkpoint_save
from .factory import NetworkFactory
from .gradcheck import GradcheckResult, run_gradcheck_suite
from .layers import (
    LayerParams,
    batchnorm_forward,
    conv2d_forward,
    gap_forward,
    softmax,
)
from .network import Network, NetworkSpec, backward
from .optim import (
    Adam,
    Optimizer,
    OptimizerState,
    SGDMomentum,
    adam_step,
    create_optimizer,
    sgd_momentum_step,
)
from .random import derive_stream
from .tensor import Tensor

__all__ = [
    "Adam",
    "GradcheckResult",
    "LayerParams",
    "ModelCheckpoint",
    "Network",
    "NetworkFactory",
    "NetworkSpec",
    "Optimizer",
    "OptimizerState",
    "SGDMomentum",
    "Tensor",
    "adam_step",
    "backward",
    "batchnorm_forward",
    "checkpoint_load",
    "checkpoint_save",
    "conv2d_forward",
    "create_optimizer",
    "derive_stream",
    "gap_forward",
    "run_gradcheck_suite",
    "sgd_momentum_step",
    "softmax",
]
