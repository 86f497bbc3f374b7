"""Patient-grouped splits, folds and class resampling."""
from collections import Counter

import pytest

from ctl.data.models import ClassLabel, DatasetManifest, ManifestEntry, SplitPlan
from ctl.data.split import (
    balanced_subset,
    holdout_pretrain_patients,
    make_folds,
    oversample,
    plan_splits,
    split_by_patient,
    subsample_label_fraction,
)
from ctl.error_handler import SplitError


def make_entries(counts):
    """``counts`` maps label -> (patients, patches per patient)."""
    entries = []
    for label, (patients, patches) in counts.items():
        for p in range(patients):
            pid = f"{label.value}{p:03d}"
            entries.extend(ManifestEntry(pid, f"V{pid}", 0, k, f"{pid}_{k}.pgm", label)
                           for k in range(patches))
    return entries


@pytest.fixture
def manifest():
    return DatasetManifest(make_entries({label: (4, 2) for label in ClassLabel}))


class TestSplitByPatient:

    def test_disjoint_and_complete(self, manifest):
        plan = split_by_patient(manifest, 0.8, seed=3)
        assert len(plan.train_patient_ids) == 16
        assert not set(plan.train_patient_ids) & set(plan.test_patient_ids)
        assert sorted(plan.train_patient_ids + plan.test_patient_ids) == manifest.patient_ids

    def test_seeded(self, manifest):
        assert (split_by_patient(manifest, 0.5, 1).to_dict()
                == split_by_patient(manifest, 0.5, 1).to_dict())
        assert (split_by_patient(manifest, 0.5, 1).to_dict()
                != split_by_patient(manifest, 0.5, 2).to_dict())

    def test_both_sides_non_empty(self, manifest):
        plan = split_by_patient(manifest, 0.999, seed=0)
        assert len(plan.test_patient_ids) == 1

    @pytest.mark.parametrize("ratio", [0.0, 1.0, -0.2])
    def test_bad_ratio(self, manifest, ratio):
        with pytest.raises(SplitError):
            split_by_patient(manifest, ratio)

    def test_single_patient(self):
        with pytest.raises(SplitError):
            split_by_patient(DatasetManifest(make_entries({ClassLabel.MI: (1, 3)})))


class TestFolds:

    def test_partition(self, manifest):
        plan = plan_splits(manifest, 0.75, k=5, seed=4)
        validation = [p for _, val in plan.folds for p in val]
        assert len(plan.folds) == 5
        assert sorted(validation) == sorted(plan.train_patient_ids)
        sizes = {len(val) for _, val in plan.folds}
        assert max(sizes) - min(sizes) <= 1

    def test_too_few_patients(self):
        with pytest.raises(SplitError):
            make_folds(["a", "b"], k=3)

    def test_k_below_two(self):
        with pytest.raises(SplitError):
            make_folds(["a", "b", "c"], k=1)

    def test_plan_round_trip_is_validated(self):
        with pytest.raises(SplitError):
            SplitPlan.from_dict({"train_patient_ids": ["a", "b"], "test_patient_ids": ["b"]})


class TestResampling:

    def test_oversample_to_majority(self):
        entries = make_entries({ClassLabel.MI: (1, 5), ClassLabel.CC: (1, 2)})
        counts = Counter(e.label for e in oversample(entries))
        assert counts == {ClassLabel.MI: 5, ClassLabel.CC: 5}

    def test_oversample_round_robin(self):
        entries = make_entries({ClassLabel.MI: (1, 4), ClassLabel.CC: (1, 2)})
        extra = oversample(entries)[len(entries):]
        assert [e.patch_index for e in extra] == [0, 1]

    def test_label_fraction_keeps_whole_patients(self):
        entries = make_entries({label: (10, 3) for label in ClassLabel})
        kept = subsample_label_fraction(entries, 0.2, seed=1)
        per_patient = Counter(e.patient_id for e in kept)
        assert len(per_patient) == 10
        assert set(per_patient.values()) == {3}

    def test_label_fraction_keeps_every_class(self):
        entries = make_entries({ClassLabel.MI: (2, 1), ClassLabel.CC: (20, 1)})
        kept = subsample_label_fraction(entries, 0.01)
        assert {e.label for e in kept} == {ClassLabel.MI, ClassLabel.CC}

    def test_full_fraction(self):
        entries = make_entries({ClassLabel.EP: (3, 2)})
        assert subsample_label_fraction(entries, 1.0) == entries

    def test_bad_fraction(self):
        with pytest.raises(SplitError):
            subsample_label_fraction(make_entries({ClassLabel.EP: (3, 2)}), 0.0)

    def test_balanced_subset(self):
        entries = make_entries({ClassLabel.MI: (2, 5), ClassLabel.HSIL: (1, 3)})
        counts = Counter(e.label for e in balanced_subset(entries, seed=2))
        assert counts == {ClassLabel.MI: 3, ClassLabel.HSIL: 3}


class TestPretrainHoldout:

    def test_disjoint(self):
        patients = [f"P{i:02d}" for i in range(10)]
        pretrain, downstream = holdout_pretrain_patients(patients, 0.2, seed=0)
        assert len(pretrain) == 2
        assert sorted(pretrain + downstream) == patients

    def test_needs_two_patients(self):
        with pytest.raises(SplitError):
            holdout_pretrain_patients(["only"])
