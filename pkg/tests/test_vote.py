"""Cross-shaped voting over volume prediction matrices."""
import json

import numpy as np
import pytest

from ctl.config import VoteConfig, WindowConfig
from ctl.const import VERDICT_NEGATIVE, VERDICT_POSITIVE
from ctl.data.imageio import read_ppm, write_pgm
from ctl.data.windows import sliding_windows
from ctl.error_handler import ConfigError, DataError, VoteError
from ctl.volume.vote import (
    PatchPredictionMatrix,
    cross_vote,
    heat_matrix_export,
    load_frames,
    predict_volume,
)

CROSS_CELLS = [(8, 5), (9, 5), (10, 5), (9, 4), (9, 6)]


def cross_matrix(shape=(16, 10), cells=CROSS_CELLS, value=0.95, background=0.1):
    probs = np.full(shape, background)
    for cell in cells:
        probs[cell] = value
    return PatchPredictionMatrix(probs)


def scan_oracle(probs, threshold, run_length):
    """Walk outwards from every qualifying cell to measure both of its runs."""
    hot = probs >= threshold
    rows, cols = hot.shape
    for i in range(rows):
        for j in range(cols):
            if not hot[i, j]:
                continue
            up = i
            while up > 0 and hot[up - 1, j]:
                up -= 1
            down = i
            while down < rows - 1 and hot[down + 1, j]:
                down += 1
            left = j
            while left > 0 and hot[i, left - 1]:
                left -= 1
            right = j
            while right < cols - 1 and hot[i, right + 1]:
                right += 1
            if down - up + 1 >= run_length and right - left + 1 >= run_length:
                return True
    return False


class TestCrossVote:

    def test_five_cell_cross(self):
        result = cross_vote(cross_matrix())
        assert result.verdict == VERDICT_POSITIVE
        assert result.witness == sorted(CROSS_CELLS)

    def test_all_below_threshold(self):
        result = cross_vote(PatchPredictionMatrix(np.full((5, 5), 0.79)))
        assert result.verdict == VERDICT_NEGATIVE
        assert result.witness == []

    def test_threshold_is_inclusive(self):
        assert cross_vote(cross_matrix(value=0.8)).positive

    def test_isolated_cell(self):
        assert not cross_vote(cross_matrix(cells=[(3, 3)])).positive

    def test_row_without_vertical_run(self):
        assert not cross_vote(cross_matrix(cells=[(2, c) for c in range(10)])).positive

    def test_corner_intersection_counts(self):
        cells = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)]
        result = cross_vote(cross_matrix(cells=cells))
        assert result.positive
        assert result.witness == sorted(cells)

    def test_gap_breaks_run(self):
        row = [(10, 4), (10, 5), (10, 6)]
        assert not cross_vote(cross_matrix(cells=[(8, 5), (11, 5)] + row)).positive
        assert cross_vote(cross_matrix(cells=[(9, 5), (11, 5)] + row)).positive

    def test_longer_run_length(self):
        assert not cross_vote(cross_matrix(), VoteConfig(run_length=4)).positive

    def test_uniform_hot_matrix_needs_room_for_both_runs(self):
        config = VoteConfig(threshold=0.05, run_length=3)
        assert cross_vote(PatchPredictionMatrix(np.full((3, 3), 0.1)), config).positive
        assert not cross_vote(PatchPredictionMatrix(np.full((2, 9), 0.1)), config).positive

    @pytest.mark.parametrize("trials", [300, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_matches_oracle_on_random_matrices(self, rng, trials):
        for _ in range(trials):
            shape = tuple(rng.integers(1, 21, size=2))
            probs = rng.random(shape) ** 0.4
            threshold = float(rng.uniform(0.3, 0.95))
            run_length = int(rng.integers(2, 5))
            result = cross_vote(PatchPredictionMatrix(probs), VoteConfig(threshold, run_length))
            assert result.positive == scan_oracle(probs, threshold, run_length)

    @pytest.mark.parametrize("trials", [100, pytest.param(1_000, marks=pytest.mark.slow)])
    def test_monotone_in_probabilities(self, rng, trials):
        for _ in range(trials):
            probs = rng.random((8, 8))
            before = cross_vote(PatchPredictionMatrix(probs)).positive
            raised = probs.copy()
            raised[tuple(rng.integers(0, 8, size=2))] = 1.0
            assert cross_vote(PatchPredictionMatrix(raised)).positive >= before

    def test_reversal_preserves_verdict(self, rng):
        for _ in range(50):
            probs = rng.random((7, 9)) ** 0.3
            verdict = cross_vote(PatchPredictionMatrix(probs)).verdict
            assert cross_vote(PatchPredictionMatrix(probs[::-1, ::-1])).verdict == verdict

    @pytest.mark.parametrize("config", [VoteConfig(run_length=0), VoteConfig(run_length=1),
                                        VoteConfig(threshold=0.0), VoteConfig(threshold=1.0),
                                        VoteConfig(threshold=-0.2)])
    def test_invalid_config(self, config):
        with pytest.raises(VoteError):
            cross_vote(cross_matrix(), config)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            VoteConfig(threshold=1.0).validate()
        with pytest.raises(ConfigError):
            VoteConfig(run_length=1).validate()

    def test_json(self):
        data = json.loads(cross_vote(cross_matrix()).to_json())
        assert data["verdict"] == VERDICT_POSITIVE
        assert [8, 5] in data["witness"]


class TestPredictionMatrix:

    @pytest.mark.parametrize("probs", [np.zeros((0, 3)), np.array([[0.2, 1.2]]),
                                       np.array([[np.nan]]), np.zeros(4)])
    def test_invalid(self, probs):
        with pytest.raises(VoteError):
            PatchPredictionMatrix(probs)

    def test_csv_round_trip(self, tmp_path, rng):
        matrix = PatchPredictionMatrix(rng.random((4, 6)))
        matrix.to_csv(tmp_path / "m.csv")
        loaded = PatchPredictionMatrix.from_csv(tmp_path / "m.csv")
        np.testing.assert_allclose(loaded.probs, matrix.probs, atol=1e-6)
        assert loaded.volume_id == "m"

    def test_non_numeric_csv(self, tmp_path):
        (tmp_path / "bad.csv").write_text("0.1,abc\n0.2,0.3\n")
        with pytest.raises(VoteError):
            PatchPredictionMatrix.from_csv(tmp_path / "bad.csv")


class TestHeatMatrix:

    def test_zero_matrix_is_blue(self, tmp_path):
        image = heat_matrix_export(PatchPredictionMatrix(np.zeros((2, 3))),
                                   tmp_path / "h.csv", tmp_path / "h.ppm", scale=4)
        assert image.shape == (8, 12, 3)
        np.testing.assert_array_equal(read_ppm(tmp_path / "h.ppm"), image)
        assert np.all(image[..., 2] == 255) and np.all(image[..., :2] == 0)
        assert (tmp_path / "h.csv").read_text().splitlines()[0] == "0,0,0"

    def test_diagonal_is_red(self):
        image = heat_matrix_export(PatchPredictionMatrix(np.eye(3)))
        np.testing.assert_array_equal(image[1, 1], [255, 0, 0])
        np.testing.assert_array_equal(image[0, 1], [0, 0, 255])

    def test_bad_scale(self):
        with pytest.raises(VoteError):
            heat_matrix_export(PatchPredictionMatrix(np.eye(2)), scale=0)


class TestPredictVolume:

    def test_matrix_shape_and_negative_verdict(self, rng):
        frames = [rng.integers(0, 256, (16, 40)).astype(np.uint8) for _ in range(4)]
        prediction = predict_volume(lambda patches: np.full(len(patches), 0.3), frames,
                                    window=WindowConfig(patch_size=16, stride=8))
        assert prediction.matrix.shape == (4, len(sliding_windows(40, 16, 8)))
        assert not prediction.result.positive

    def test_bright_region_is_positive(self):
        frames = [np.zeros((8, 48), dtype=np.uint8) for _ in range(5)]
        for index in (1, 2, 3):
            frames[index][:, 16:40] = 200

        def brightness(patches):
            return np.array([float(p.mean() > 100) for p in patches])

        prediction = predict_volume(brightness, frames, window=WindowConfig(8, 8))
        assert prediction.result.positive
        assert len(prediction.result.witness) == 5
        assert all(1 <= r <= 3 and 2 <= c <= 4 for r, c in prediction.result.witness)

    def test_unequal_frames(self):
        with pytest.raises(DataError):
            predict_volume(lambda p: np.zeros(len(p)), [np.zeros((8, 16)), np.zeros((8, 24))],
                           window=WindowConfig(8, 8))

    def test_predictor_shape_checked(self):
        with pytest.raises(VoteError):
            predict_volume(lambda p: np.zeros(1), [np.zeros((8, 32))], window=WindowConfig(8, 8))

    def test_load_frames(self, tmp_path, rng):
        frames = [rng.integers(0, 256, (4, 6)).astype(np.uint8) for _ in range(3)]
        for index, frame in enumerate(frames):
            write_pgm(tmp_path / f"frame_{index:03d}.pgm", frame)
        loaded = load_frames(tmp_path)
        for a, b in zip(frames, loaded):
            np.testing.assert_array_equal(a, b)

    def test_empty_frame_directory(self, tmp_path):
        with pytest.raises(DataError):
            load_frames(tmp_path)
