"""Numeric core: functional layers, network assembly and optimizers."""
import numpy as np
import pytest

from ctl.error_handler import BackwardError, OptimizerError, ShapeError
from ctl.nn.factory import NetworkFactory
from ctl.nn.layers import (
    KIND_BATCHNORM,
    KIND_CONV2D,
    LayerParams,
    batchnorm_forward,
    conv2d_forward,
    gap_forward,
    softmax,
)
from ctl.nn.optim import OptimizerState, adam_step, create_optimizer, sgd_momentum_step
from ctl.nn.random import derive_stream
from ctl.nn.tensor import Tensor


def naive_conv(x, weight, bias, stride, padding):
    x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    n, _, h, w = x.shape
    out_ch, _, kh, kw = weight.shape
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    out = np.zeros((n, out_ch, ho, wo))
    for b in range(n):
        for o in range(out_ch):
            for i in range(ho):
                for j in range(wo):
                    window = x[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[b, o, i, j] = np.sum(window * weight[o]) + bias[o]
    return out


def conv_params(rng, out_ch=3, in_ch=2, k=3, stride=1, padding=0):
    return LayerParams(KIND_CONV2D, Tensor(rng.standard_normal((out_ch, in_ch, k, k))),
                       Tensor(rng.standard_normal(out_ch)), stride=stride, padding=padding)


class TestConv2d:

    @pytest.mark.parametrize("stride, padding", [(1, 0), (1, 1), (2, 0), (2, 1)])
    def test_matches_naive(self, rng, stride, padding):
        x = rng.standard_normal((2, 2, 7, 6))
        params = conv_params(rng, stride=stride, padding=padding)
        expected = naive_conv(x, params.weights.data, params.bias.data, stride, padding)
        np.testing.assert_allclose(conv2d_forward(x, params), expected, rtol=1e-10, atol=1e-12)

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            conv2d_forward(rng.standard_normal((1, 3, 5, 5)), conv_params(rng, in_ch=2))

    def test_kernel_larger_than_input(self, rng):
        with pytest.raises(ShapeError):
            conv2d_forward(rng.standard_normal((1, 2, 2, 2)), conv_params(rng, k=3))

    def test_weight_rank(self):
        with pytest.raises(ShapeError):
            LayerParams(KIND_CONV2D, Tensor(np.zeros((3, 3))), Tensor(np.zeros(3)))


class TestBatchNorm:

    def params(self, channels=3, **kwargs):
        return LayerParams(KIND_BATCHNORM, Tensor.ones(channels, np.float64),
                           Tensor.zeros(channels, np.float64), **kwargs)

    def test_training_normalizes(self, rng):
        x = rng.standard_normal((8, 3, 4, 4)) * 5 + 2
        out = batchnorm_forward(x, self.params(), training=True)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=(0, 2, 3)), 1.0, rtol=1e-4)

    def test_running_statistics(self, rng):
        params = self.params()
        x = rng.standard_normal((4, 3, 2, 2)) + 10.0
        batchnorm_forward(x, params, training=True)
        count = 4 * 2 * 2
        expected_var = 0.9 + 0.1 * x.var(axis=(0, 2, 3)) * count / (count - 1)
        np.testing.assert_allclose(params.running_mean.data, 0.1 * x.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(params.running_var.data, expected_var)

    def test_inference_uses_running_statistics(self, rng):
        params = self.params()
        x = rng.standard_normal((2, 3, 2, 2))
        np.testing.assert_allclose(batchnorm_forward(x, params, training=False),
                                   x / np.sqrt(1.0 + params.epsilon))

    def test_single_sample_training(self, rng):
        with pytest.raises(ShapeError):
            batchnorm_forward(rng.standard_normal((1, 3, 2, 2)), self.params(), training=True)

    def test_non_positive_epsilon(self):
        with pytest.raises(ShapeError):
            self.params(epsilon=0.0)


class TestFunctional:

    def test_gap(self, rng):
        x = rng.standard_normal((2, 3, 4, 5))
        np.testing.assert_allclose(gap_forward(x), x.mean(axis=(2, 3)))

    def test_softmax_rows(self, rng):
        logits = rng.standard_normal((4, 5)) * 50
        probs = softmax(logits)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        assert np.all(probs >= 0)

    def test_softmax_shift_invariant(self, rng):
        logits = rng.standard_normal((3, 5))
        np.testing.assert_allclose(softmax(logits), softmax(logits + 1000.0))


class TestNetwork:

    def test_pretrain_embedding_shape(self, tiny_spec, rng):
        network = NetworkFactory.create_pretrain_network(0, tiny_spec)
        out = network.forward(rng.random((4, 1, 12, 12)).astype(np.float32), training=True)
        assert out.shape == (4, tiny_spec.projection_out)
        assert network.classifier is None

    def test_downstream_probabilities(self, tiny_spec, rng):
        network = NetworkFactory.create_downstream_network(0, tiny_spec)
        probs = network.forward(rng.random((3, 1, 12, 12)).astype(np.float32), training=False)
        assert probs.shape == (3, 5)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-5)
        assert network.features.shape == (3, 8, 6, 6)

    def test_same_seed_same_weights(self, tiny_spec):
        a = NetworkFactory.create_downstream_network(3, tiny_spec).state_dict()
        b = NetworkFactory.create_downstream_network(3, tiny_spec).state_dict()
        assert a.keys() == b.keys()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_backward_before_forward(self, tiny_spec):
        network = NetworkFactory.create_downstream_network(0, tiny_spec)
        with pytest.raises(BackwardError):
            network.backward(np.zeros((1, 5)))

    def test_frozen_encoder_excluded(self, tiny_spec):
        network = NetworkFactory.create_downstream_network(0, tiny_spec, freeze_encoder=True)
        assert set(network.trainable_parameters()) == {"head.fc.weight", "head.fc.bias"}

    def test_wrong_input_channels(self, tiny_spec, rng):
        network = NetworkFactory.create_downstream_network(0, tiny_spec)
        with pytest.raises(ShapeError):
            network.forward(rng.random((2, 3, 12, 12)))


class TestOptimizers:

    def test_adam_first_step(self):
        state = OptimizerState.adam(learning_rate=0.1)
        params = {"w": np.array([1.0, -2.0])}
        grads = {"w": np.array([0.5, -4.0])}
        updated = adam_step(state, params, grads)
        # first bias-corrected step moves each coordinate by lr * sign(g)
        np.testing.assert_allclose(updated["w"], [0.9, -1.9], rtol=1e-6)
        assert state.step_count == 1

    def test_adam_decoupled_decay(self):
        state = OptimizerState.adam(learning_rate=0.1, weight_decay=0.5)
        updated = adam_step(state, {"w": np.array([2.0])}, {"w": np.array([0.0])})
        np.testing.assert_allclose(updated["w"], [2.0 - 0.1 * 0.5 * 2.0])

    def test_sgd_momentum(self):
        state = OptimizerState.sgd_momentum(learning_rate=0.1, momentum=0.9)
        params = {"w": np.array([1.0])}
        params = sgd_momentum_step(state, params, {"w": np.array([1.0])})
        np.testing.assert_allclose(params["w"], [0.9])
        params = sgd_momentum_step(state, params, {"w": np.array([1.0])})
        # v = 0.9 * -0.1 - 0.1 = -0.19
        np.testing.assert_allclose(params["w"], [0.71])

    def test_shape_mismatch_leaves_state_untouched(self):
        state = OptimizerState.adam()
        with pytest.raises(OptimizerError):
            adam_step(state, {"w": np.zeros(3)}, {"w": np.zeros(4)})
        assert state.step_count == 0
        assert state.moments == {}

    def test_wrong_kind(self):
        with pytest.raises(OptimizerError):
            sgd_momentum_step(OptimizerState.adam(), {"w": np.zeros(1)}, {"w": np.zeros(1)})

    def test_unknown_kind(self):
        with pytest.raises(OptimizerError):
            OptimizerState("rmsprop", 0.1)

    def test_step_updates_tensors(self):
        tensor = Tensor(np.array([1.0, 1.0]))
        tensor.accumulate(np.array([1.0, -1.0]))
        create_optimizer(OptimizerState.sgd_momentum(0.5, 0.0)).step({"w": tensor})
        np.testing.assert_allclose(tensor.data, [0.5, 1.5])


class TestRandomStreams:

    def test_streams_are_reproducible(self):
        a = derive_stream(5, "split").random(4)
        np.testing.assert_array_equal(a, derive_stream(5, "split").random(4))

    def test_names_and_keys_separate_streams(self):
        base = derive_stream(5, "split").random(4)
        assert not np.array_equal(base, derive_stream(5, "folds").random(4))
        assert not np.array_equal(derive_stream(5, "augment", 0, 1).random(4),
                                  derive_stream(5, "augment", 1, 0).random(4))
