"""Network factory for contrastive texture learning."""
import logging
from typing import Optional

from ..const import HEAD_GAP_LINEAR, HEAD_PROJECTION
from ..error_handler import CheckpointError
from .checkpoint import CODE_ARCHITECTURE, ModelCheckpoint
from .network import ENCODER_PREFIX, Network, NetworkSpec, build_encoder, build_head
from .random import derive_stream

_LOGGER = logging.getLogger(__name__)


class NetworkFactory:
    """Factory for creating pretraining and downstream networks."""

    @staticmethod
    def create_pretrain_network(seed: int, spec: Optional[NetworkSpec] = None) -> Network:
        """Encoder plus projection MLP."""
        spec = (spec or NetworkSpec()).with_head(HEAD_PROJECTION)
        rng = derive_stream(seed, "init.encoder")
        encoder = build_encoder(spec, rng)
        head = build_head(spec, derive_stream(seed, "init.projection"))
        network = Network(spec, encoder, head)
        _LOGGER.debug("Created pretraining network with %s tensors", len(network.parameters()))
        return network

    @staticmethod
    def create_downstream_network(
        seed: int,
        spec: Optional[NetworkSpec] = None,
        checkpoint: Optional[ModelCheckpoint] = None,
        freeze_encoder: bool = False,
    ) -> Network:
        """Encoder, GAP, dense(5) and softmax; the encoder optionally comes from a checkpoint.

        The classification head is always freshly initialized from the seed.
        """
        if checkpoint is not None:
            ckpt_spec = checkpoint.network_spec
            if spec is not None and _encoder_fields(spec) != _encoder_fields(ckpt_spec):
                raise CheckpointError(
                    "Checkpoint encoder does not match the requested architecture",
                    code=CODE_ARCHITECTURE,
                )
            spec = ckpt_spec
        spec = (spec or NetworkSpec()).with_head(HEAD_GAP_LINEAR)
        encoder = build_encoder(spec, derive_stream(seed, "init.encoder"))
        head = build_head(spec, derive_stream(seed, "init.classifier"))
        network = Network(spec, encoder, head)
        if checkpoint is not None:
            checkpoint.apply(network, prefix=ENCODER_PREFIX, strict=True)
            _LOGGER.info("Loaded encoder from %s checkpoint (seed %s)",
                         checkpoint.role or "unknown", checkpoint.seed)
        network.freeze_encoder = freeze_encoder
        return network


def _encoder_fields(spec: NetworkSpec):
    return spec.in_channels, spec.stem_width, spec.block_widths, spec.block_strides
