"""Patient-grouped splitting, cross-validation folds and class resampling."""
import logging
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..const import DEFAULT_FOLDS, DEFAULT_PRETRAIN_HOLDOUT, DEFAULT_SPLIT_RATIO
from ..error_handler import SplitError
from ..nn.random import derive_stream
from .models import ClassLabel, DatasetManifest, ManifestEntry, SplitPlan

_LOGGER = logging.getLogger(__name__)


def _partition_size(count: int, ratio: float) -> int:
    return min(max(int(round(ratio * count)), 1), count - 1)


def split_by_patient(manifest: DatasetManifest, ratio: float = DEFAULT_SPLIT_RATIO,
                     seed: int = 0) -> SplitPlan:
    """Shuffle patients deterministically and cut them into train and test sides."""
    if not 0.0 < ratio < 1.0:
        raise SplitError(f"Split ratio must lie in (0, 1), got {ratio}")
    patients = manifest.patient_ids
    if len(patients) < 2:
        raise SplitError(f"Need at least 2 patients to split, got {len(patients)}")
    order = derive_stream(seed, "split").permutation(len(patients))
    shuffled = [patients[i] for i in order]
    n_train = _partition_size(len(shuffled), ratio)
    plan = SplitPlan(sorted(shuffled[:n_train]), sorted(shuffled[n_train:]))
    _LOGGER.info("Split %s patients into %s train and %s test",
                 len(patients), n_train, len(patients) - n_train)
    return plan.validate()


def make_folds(train_patients: Sequence[str], k: int = DEFAULT_FOLDS,
               seed: int = 0) -> List[Tuple[List[str], List[str]]]:
    """k near-equal validation groups of patients; each fold trains on the rest."""
    patients = sorted(train_patients)
    if k < 2:
        raise SplitError(f"Cross-validation needs k >= 2, got {k}")
    if len(patients) < k:
        raise SplitError(f"Cannot make {k} folds from {len(patients)} patients")
    shuffled = np.array(patients, dtype=object)
    derive_stream(seed, "folds").shuffle(shuffled)
    folds = []
    for group in np.array_split(shuffled, k):
        validation = sorted(str(p) for p in group)
        held = set(validation)
        folds.append(([p for p in patients if p not in held], validation))
    return folds


def plan_splits(manifest: DatasetManifest, ratio: float = DEFAULT_SPLIT_RATIO,
                k: int = DEFAULT_FOLDS, seed: int = 0) -> SplitPlan:
    """Train/test split plus k folds over the training patients."""
    plan = split_by_patient(manifest, ratio, seed)
    plan.folds = make_folds(plan.train_patient_ids, min(k, len(plan.train_patient_ids)), seed)
    return plan.validate()


def _by_class(entries: Sequence[ManifestEntry]) -> Dict[ClassLabel, List[ManifestEntry]]:
    groups: Dict[ClassLabel, List[ManifestEntry]] = defaultdict(list)
    for entry in entries:
        groups[entry.label].append(entry)
    return {label: groups[label] for label in ClassLabel if label in groups}


def oversample(entries: Sequence[ManifestEntry]) -> List[ManifestEntry]:
    """Duplicate minority-class entries round-robin up to the majority count."""
    groups = _by_class(entries)
    if not groups:
        raise SplitError("Cannot oversample an empty entry list")
    target = max(len(group) for group in groups.values())
    result = list(entries)
    for label, group in groups.items():
        extra = target - len(group)
        result.extend(group[i % len(group)] for i in range(extra))
        if extra:
            _LOGGER.debug("Oversampled %s by %s entries", label.value, extra)
    return result


def subsample_label_fraction(entries: Sequence[ManifestEntry], fraction: float,
                             seed: int = 0) -> List[ManifestEntry]:
    """Keep all patches of a deterministic fraction of each class's patients.

    Every present class keeps at least one patient.
    """
    if not 0.0 < fraction <= 1.0:
        raise SplitError(f"Label fraction must lie in (0, 1], got {fraction}")
    if not entries:
        raise SplitError("No labeled entries to subsample")
    if fraction == 1.0:
        return list(entries)
    kept = set()
    for label, group in _by_class(entries).items():
        patients = sorted({e.patient_id for e in group})
        count = max(1, int(round(fraction * len(patients))))
        rng = derive_stream(seed, "label_fraction", label.index)
        chosen = rng.choice(len(patients), size=count, replace=False)
        kept.update(patients[i] for i in chosen)
    return [e for e in entries if e.patient_id in kept]


def balanced_subset(entries: Sequence[ManifestEntry], seed: int = 0) -> List[ManifestEntry]:
    """Equal number of patches per class, the smallest class count."""
    groups = _by_class(entries)
    if not groups:
        raise SplitError("Cannot balance an empty entry list")
    size = min(len(group) for group in groups.values())
    chosen = set()
    for label, group in groups.items():
        picks = derive_stream(seed, "balanced", label.index).choice(
            len(group), size=size, replace=False
        )
        chosen.update(group[i].key for i in picks)
    return [e for e in entries if e.key in chosen]


def holdout_pretrain_patients(train_patients: Sequence[str],
                              fraction: float = DEFAULT_PRETRAIN_HOLDOUT,
                              seed: int = 0) -> Tuple[List[str], List[str]]:
    """Split training patients into a label-free pretraining group and a downstream group."""
    patients = sorted(train_patients)
    if len(patients) < 2:
        raise SplitError("Need at least 2 training patients for a pretraining holdout")
    if not 0.0 < fraction < 1.0:
        raise SplitError(f"Holdout fraction must lie in (0, 1), got {fraction}")
    order = derive_stream(seed, "pretrain_holdout").permutation(len(patients))
    count = _partition_size(len(patients), fraction)
    pretrain = sorted(patients[i] for i in order[:count])
    downstream = sorted(patients[i] for i in order[count:])
    return pretrain, downstream
