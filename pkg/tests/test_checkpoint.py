import numpy as np
import pytest

from ctl.const import CHECKPOINT_ROLE_PRETRAIN
from ctl.error_handler import CheckpointError
from ctl.nn.checkpoint import (
    CODE_ARCHITECTURE,
    CODE_BAD_MAGIC,
    CODE_CRC,
    CODE_TRUNCATED,
    CODE_VERSION,
    ModelCheckpoint,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
)
from ctl.nn.factory import NetworkFactory
from ctl.nn.network import ENCODER_PREFIX, NetworkSpec
from ctl.nn.optim import OptimizerState, adam_step


@pytest.fixture
def pretrained(tiny_spec):
    network = NetworkFactory.create_pretrain_network(11, tiny_spec)
    state = OptimizerState.adam(learning_rate=0.01)
    params = {name: t.data for name, t in network.parameters().items()}
    adam_step(state, params, {name: np.ones_like(v) for name, v in params.items()})
    return network, ModelCheckpoint.from_network(network, 11, CHECKPOINT_ROLE_PRETRAIN,
                                                 optimizer=state, lbp={"p": 8, "r": 1.0})


class TestCheckpointFile:

    def test_reload_restores_everything(self, tmp_path, pretrained):
        network, checkpoint = pretrained
        path = tmp_path / "model.ckpt"
        checkpoint.save(path)
        loaded = ModelCheckpoint.load(path)
        assert loaded.seed == 11
        assert loaded.role == CHECKPOINT_ROLE_PRETRAIN
        assert loaded.meta["lbp"] == {"p": 8, "r": 1.0}
        assert loaded.network_spec == network.spec
        assert loaded.optimizer.step_count == 1
        for name, value in network.state_dict().items():
            np.testing.assert_array_equal(loaded.blobs[name], value.astype(np.float32))
        for name, slots in checkpoint.optimizer.moments.items():
            np.testing.assert_array_equal(loaded.optimizer.moments[name]["m"],
                                          slots["m"].astype(np.float32))

    def test_bytes_are_deterministic(self, pretrained):
        _, checkpoint = pretrained
        assert checkpoint_to_bytes(checkpoint) == checkpoint_to_bytes(checkpoint)

    def test_bad_magic(self, pretrained):
        data = bytearray(checkpoint_to_bytes(pretrained[1]))
        data[:4] = b"NOPE"
        with pytest.raises(CheckpointError) as excinfo:
            checkpoint_from_bytes(bytes(data))
        assert excinfo.value.code == CODE_BAD_MAGIC

    def test_version_mismatch(self, pretrained):
        data = bytearray(checkpoint_to_bytes(pretrained[1]))
        data[4:8] = (99).to_bytes(4, "little")
        with pytest.raises(CheckpointError) as excinfo:
            checkpoint_from_bytes(bytes(data))
        assert excinfo.value.code == CODE_VERSION

    def test_flipped_payload_byte(self, pretrained):
        data = bytearray(checkpoint_to_bytes(pretrained[1]))
        # inside the last blob's float payload, just before the trailing CRC
        data[-6] ^= 0xFF
        with pytest.raises(CheckpointError) as excinfo:
            checkpoint_from_bytes(bytes(data))
        assert excinfo.value.code == CODE_CRC

    def test_truncated(self, pretrained):
        data = checkpoint_to_bytes(pretrained[1])
        with pytest.raises(CheckpointError) as excinfo:
            checkpoint_from_bytes(data[:-10])
        assert excinfo.value.code == CODE_TRUNCATED

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            ModelCheckpoint.load(tmp_path / "absent.ckpt")


class TestEncoderTransfer:

    def test_downstream_encoder_matches_pretrained(self, pretrained):
        network, checkpoint = pretrained
        downstream = NetworkFactory.create_downstream_network(5, checkpoint=checkpoint)
        source = network.state_dict()
        for name, value in downstream.state_dict().items():
            if name.startswith(ENCODER_PREFIX):
                np.testing.assert_array_equal(value, source[name])
        assert downstream.classifier.out_features == 5

    def test_classifier_head_is_seeded(self, pretrained):
        _, checkpoint = pretrained
        a = NetworkFactory.create_downstream_network(5, checkpoint=checkpoint)
        b = NetworkFactory.create_downstream_network(5, checkpoint=checkpoint)
        np.testing.assert_array_equal(a.classifier.params.weights.data,
                                      b.classifier.params.weights.data)

    def test_architecture_mismatch(self, pretrained):
        _, checkpoint = pretrained
        other = NetworkSpec(stem_width=6, block_widths=(6,), block_strides=(1,))
        with pytest.raises(CheckpointError) as excinfo:
            NetworkFactory.create_downstream_network(5, other, checkpoint)
        assert excinfo.value.code == CODE_ARCHITECTURE

    def test_shape_mismatch_on_apply(self, pretrained):
        _, checkpoint = pretrained
        network = NetworkFactory.create_pretrain_network(
            0, NetworkSpec(stem_width=6, block_widths=(6,), block_strides=(1,))
        )
        with pytest.raises(CheckpointError):
            checkpoint.apply(network, strict=False)
