"""Shared fixtures: a tiny network architecture and a small synthetic corpus."""
import numpy as np
import pytest

from ctl.config import CorpusConfig, LbpConfig
from ctl.data.synth import generate_corpus
from ctl.nn.network import NetworkSpec

CORPUS_SEED = 7


@pytest.fixture
def tiny_spec():
    return NetworkSpec(stem_width=4, block_widths=(4, 8), block_strides=(1, 2),
                       projection_hidden=16, projection_out=8)


@pytest.fixture
def small_lbp():
    return LbpConfig(p=8, r=1.0)


@pytest.fixture
def corpus_config():
    return CorpusConfig(patients_per_class=3, frames_per_volume=2, frame_width=32,
                        patch_size=16)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """15 patients, 6 patches each, written once per session."""
    config = CorpusConfig(patients_per_class=3, frames_per_volume=2, frame_width=32,
                          patch_size=16)
    return generate_corpus(CORPUS_SEED, tmp_path_factory.mktemp("corpus"), config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def default_corpus_dir(tmp_path_factory):
    """Full-size corpus with default settings, for the slow training checks."""
    out = tmp_path_factory.mktemp("default_corpus")
    generate_corpus(CORPUS_SEED, out, CorpusConfig())
    return out
