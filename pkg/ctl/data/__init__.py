"""Synthetic corpus, manifests, splitting and sliding windows."""
from .imageio import read_pgm, read_ppm, write_pgm, write_ppm
from .models import ClassLabel, DatasetManifest, ManifestEntry, SplitPlan, VolumeRecord
from .split import (
    balanced_subset,
    holdout_pretrain_patients,
    make_folds,
    oversample,
    plan_splits,
    split_by_patient,
    subsample_label_fraction,
)
from .store import TextureSource, TextureStore
from .synth import generate_corpus
from .windows import extract_windows, sliding_windows

__all__ = [
    "ClassLabel",
    "DatasetManifest",
    "ManifestEntry",
    "SplitPlan",
    "TextureSource",
    "TextureStore",
    "VolumeRecord",
    "balanced_subset",
    "extract_windows",
    "generate_corpus",
    "holdout_pretrain_patients",
    "make_folds",
    "oversample",
    "plan_splits",
    "read_pgm",
    "read_ppm",
    "sliding_windows",
    "split_by_patient",
    "subsample_label_fraction",
    "write_pgm",
    "write_ppm",
]
