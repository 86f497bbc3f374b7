"""Central finite-difference checks of every analytic gradient in 64-bit mode."""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..const import HEAD_GAP_LINEAR, HEAD_PROJECTION
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
from .network import Network, NetworkSpec, build_encoder, build_head
from .random import derive_stream
from .tensor import Tensor

_LOGGER = logging.getLogger(__name__)

STEP = 1e-3
MIN_STEP = 1e-7
TOLERANCE = 1e-4


@dataclass
class GradcheckResult:
    """Outcome of one finite-difference comparison."""
    name: str
    relative_error: float
    checked: int
    skipped: int = 0
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(self.checked > 0 and self.relative_error < self.tolerance)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "relative_error": self.relative_error,
            "checked": self.checked,
            "skipped": self.skipped,
            "passed": self.passed,
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / (||a|| + ||n||), zero when both vanish."""
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def relu_layers(module) -> List[ReLU]:
    """Every ReLU reachable from a layer or network."""
    if isinstance(module, ReLU):
        return [module]
    if isinstance(module, Network):
        children = [module.encoder, module.head]
    elif isinstance(module, ResidualBlock):
        children = module._children()
    elif isinstance(module, Sequential):
        children = module.layers
    else:
        children = []
    found = []
    for child in children:
        found.extend(relu_layers(child))
    return found


def _kink_state(relus: List[ReLU]) -> Tuple[bytes, ...]:
    return tuple(np.packbits(layer._cache).tobytes() for layer in relus)


def numeric_gradient(loss: Callable[[], float], array: np.ndarray,
                     indices: List[Tuple[int, ...]], step: float = STEP,
                     relus: Optional[List[ReLU]] = None) -> List[Optional[float]]:
    """Central differences of ``loss`` w.r.t. selected elements of ``array`` (in place).

    When ``relus`` is given, a probe whose +step or -step evaluation flips any ReLU mask
    is retried with a ten times smaller step down to MIN_STEP, then reported as None.
    """
    relus = relus or []
    values: List[Optional[float]] = []
    for index in indices:
        original = array[index]
        base = loss(), _kink_state(relus)
        value = None
        h = step
        while h >= MIN_STEP:
            array[index] = original + h
            plus = loss()
            plus_state = _kink_state(relus)
            array[index] = original - h
            minus = loss()
            minus_state = _kink_state(relus)
            array[index] = original
            if plus_state == base[1] and minus_state == base[1]:
                value = (plus - minus) / (2.0 * h)
                break
            h /= 10.0
        values.append(value)
    return values


def _sample(shape, count: int, rng: np.random.Generator) -> List[Tuple[int, ...]]:
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(count, size), replace=False)
    return [np.unravel_index(i, shape) for i in sorted(flat)]


def check_module(name: str, module, x: np.ndarray, rng: np.random.Generator,
                 samples: int = 12, step: float = STEP,
                 tolerance: float = TOLERANCE) -> GradcheckResult:
    """Compare backward() of a layer or network with central differences.

    The scalar loss is sum(output * R) for a fixed random R, so every output element
    contributes. Parameters and the input are probed at ``samples`` sampled elements each.
    """
    x = np.array(x, dtype=np.float64)
    upstream = rng.standard_normal(module.forward(x, True).shape)
    relus = relu_layers(module)

    def loss() -> float:
        return float(np.sum(module.forward(x, True) * upstream))

    params: Dict[str, Tensor] = module.parameters()
    for tensor in params.values():
        tensor.zero_grad()
    module.forward(x, True)
    dx = module.backward(upstream)

    probes = []
    if dx is not None:
        probes.append((x, dx.copy()))
    grads = {key: tensor.grad.copy() for key, tensor in params.items()}
    probes.extend((tensor.data, grads[key]) for key, tensor in params.items())

    analytic, numeric = [], []
    skipped = 0
    for array, grad in probes:
        indices = _sample(array.shape, samples, rng)
        for index, value in zip(indices, numeric_gradient(loss, array, indices, step, relus)):
            if value is None:
                skipped += 1
                continue
            analytic.append(grad[index])
            numeric.append(value)
    result = GradcheckResult(
        name,
        relative_error(np.asarray(analytic), np.asarray(numeric)),
        len(analytic),
        skipped,
        tolerance,
    )
    _LOGGER.debug("Gradient check %s: relative error %.3e over %s elements (%s skipped)",
                  name, result.relative_error, result.checked, skipped)
    return result


def _away_from_zero(rng: np.random.Generator, shape) -> np.ndarray:
    """Inputs at least 0.1 from the ReLU kink."""
    magnitude = 0.1 + rng.random(shape)
    return np.where(rng.random(shape) < 0.5, -magnitude, magnitude)


def _float64(layer: Layer) -> Layer:
    layer.astype(np.float64)
    return layer


def _random_affine(bn: BatchNorm, rng: np.random.Generator) -> BatchNorm:
    channels = bn.params.weights.shape[0]
    bn.params.weights.data = 0.5 + rng.random(channels)
    bn.params.bias.data = rng.standard_normal(channels)
    return bn


def _network(spec: NetworkSpec, seed: int) -> Network:
    network = Network(spec, build_encoder(spec, derive_stream(seed, "gradcheck.encoder")),
                      build_head(spec, derive_stream(seed, "gradcheck.head")))
    return network.astype(np.float64)


def run_gradcheck_suite(seed: int = 0, samples: int = 12) -> List[GradcheckResult]:
    """Check every layer kind, the residual block, the composed encoder and both heads."""
    rng = derive_stream(seed, "gradcheck")
    network_samples = max(2, samples // 3)
    results = [
        check_module("conv2d", _float64(Conv2d("conv", 3, 4, 3, rng, stride=2, padding=1)),
                     rng.standard_normal((2, 3, 7, 7)), rng, samples),
        check_module("conv2d_1x1", _float64(Conv2d("conv1x1", 2, 3, 1, rng)),
                     rng.standard_normal((2, 2, 4, 4)), rng, samples),
        check_module("batchnorm", _random_affine(_float64(BatchNorm("bn", 3)), rng),
                     rng.standard_normal((4, 3, 5, 5)), rng, samples),
        check_module("batchnorm_dense", _random_affine(_float64(BatchNorm("bn1d", 4)), rng),
                     rng.standard_normal((6, 4)), rng, samples),
        check_module("relu", ReLU("relu"), _away_from_zero(rng, (2, 3, 4, 4)), rng, samples),
        check_module("gap", GlobalAvgPool("gap"), rng.standard_normal((2, 3, 4, 5)), rng,
                     samples),
        check_module("dense", _float64(Dense("fc", 6, 4, rng)),
                     rng.standard_normal((3, 6)), rng, samples),
        check_module("softmax", Softmax("softmax"), rng.standard_normal((3, 5)), rng, samples),
        check_module("residual_block", _float64(ResidualBlock("block", 3, 4, 2, rng)),
                     rng.standard_normal((3, 3, 8, 8)), rng, samples),
        check_module("residual_identity", _float64(ResidualBlock("block_id", 3, 3, 1, rng)),
                     rng.standard_normal((3, 3, 6, 6)), rng, samples),
        check_module("encoder_projection", _network(NetworkSpec(head=HEAD_PROJECTION), seed),
                     rng.standard_normal((2, 1, 16, 16)), rng, network_samples),
        check_module("encoder_classifier", _network(NetworkSpec(head=HEAD_GAP_LINEAR), seed),
                     rng.standard_normal((2, 1, 16, 16)), rng, network_samples),
    ]
    failed = [r.name for r in results if not r.passed]
    if failed:
        _LOGGER.warning("Gradient check failed for: %s", ", ".join(failed))
    else:
        _LOGGER.info("All %s gradient checks passed", len(results))
    return results
