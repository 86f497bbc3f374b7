import numpy as np
import pytest

from ctl.cam.cam import (
    activation_map,
    class_activation,
    compute_cam,
    emit_overlay,
    interior,
    normalize,
    upsample,
)
from ctl.cam.colormap import colormap
from ctl.classifier.model import build_downstream
from ctl.config import LbpConfig
from ctl.data.imageio import read_ppm
from ctl.error_handler import CamError
from ctl.nn.factory import NetworkFactory


class TestActivation:

    def test_weighted_sum(self, rng):
        features = rng.standard_normal((3, 4, 5))
        weights = np.array([0.5, -1.0, 2.0])
        expected = 0.5 * features[0] - features[1] + 2.0 * features[2]
        np.testing.assert_allclose(class_activation(features, weights), expected)

    def test_weight_count_mismatch(self, rng):
        with pytest.raises(CamError):
            class_activation(rng.standard_normal((3, 4, 5)), np.ones(2))

    def test_upsample_constant(self):
        np.testing.assert_allclose(upsample(np.full((2, 3), 4.0), (8, 9)), 4.0)

    def test_upsample_keeps_extremes_in_corners(self):
        raw = np.array([[0.0, 1.0], [2.0, 3.0]])
        up = upsample(raw, (6, 6))
        assert up.shape == (6, 6)
        assert up[0, 0] == 0.0
        assert up[-1, -1] == 3.0

    def test_normalize(self):
        np.testing.assert_allclose(normalize(np.array([-2.0, 0.0, 2.0])), [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(normalize(np.full(3, 7.0)), np.zeros(3))

    def test_raw_keeps_sign(self):
        cam = activation_map(np.ones((1, 2, 2)), np.array([-1.0]), 0, (4, 4))
        assert np.all(cam.raw == -1.0)
        assert np.all(cam.upsampled == 0.0)


class TestComputeCam:

    def test_sized_like_texture_map(self, tiny_spec, rng):
        network = build_downstream(0, spec=tiny_spec)
        lbp = LbpConfig(p=8, r=2.0)
        image = rng.integers(0, 256, (20, 20)).astype(np.uint8)
        cam = compute_cam(network, image, 3, lbp)
        assert cam.raw.shape == (8, 8)
        assert cam.upsampled.shape == (16, 16)
        assert cam.upsampled.min() >= 0.0 and cam.upsampled.max() <= 1.0
        assert interior(image, lbp).shape == (16, 16)

    def test_class_out_of_range(self, tiny_spec, rng):
        with pytest.raises(CamError):
            compute_cam(build_downstream(0, spec=tiny_spec), rng.integers(0, 256, (12, 12)), 5,
                        LbpConfig(8, 1.0))

    def test_needs_classifier_head(self, tiny_spec, rng):
        with pytest.raises(CamError):
            compute_cam(NetworkFactory.create_pretrain_network(0, tiny_spec),
                        rng.integers(0, 256, (12, 12)), 0, LbpConfig(8, 1.0))


class TestOverlay:

    def test_blend(self, tmp_path):
        cam = activation_map(np.arange(4.0).reshape(1, 2, 2), np.array([1.0]), 1, (2, 2))
        image = np.full((2, 2), 100, dtype=np.uint8)
        rgb = emit_overlay(image, cam, 0.5, tmp_path / "o.ppm")
        expected = np.rint(0.5 * 100 + 0.5 * colormap(cam.upsampled).astype(float))
        np.testing.assert_array_equal(rgb, expected.astype(np.uint8))
        np.testing.assert_array_equal(read_ppm(tmp_path / "o.ppm"), rgb)

    def test_alpha_zero_is_gray(self):
        cam = activation_map(np.ones((1, 3, 3)), np.array([1.0]), 0, (3, 3))
        image = np.arange(9, dtype=np.uint8).reshape(3, 3)
        rgb = emit_overlay(image, cam, 0.0)
        for channel in range(3):
            np.testing.assert_array_equal(rgb[..., channel], image)

    def test_size_mismatch(self):
        cam = activation_map(np.ones((1, 3, 3)), np.array([1.0]), 0, (3, 3))
        with pytest.raises(CamError):
            emit_overlay(np.zeros((4, 4), dtype=np.uint8), cam, 0.5)

    def test_alpha_range(self):
        cam = activation_map(np.ones((1, 3, 3)), np.array([1.0]), 0, (3, 3))
        with pytest.raises(CamError):
            emit_overlay(np.zeros((3, 3), dtype=np.uint8), cam, 1.5)


def test_colormap_stops():
    np.testing.assert_array_equal(colormap([0.0, 0.5, 1.0, 2.0]),
                                  [[0, 0, 255], [0, 255, 0], [255, 0, 0], [255, 0, 0]])
