"""LBP parameter sweep and label-fraction study."""
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..classifier.model import build_downstream, checkpoint_lbp
from ..classifier.trainer import evaluate_entries, finetune
from ..config import FinetuneConfig, LbpConfig, PretrainConfig
from ..const import (
    DEFAULT_SPLIT_RATIO,
    DEFAULT_SWEEP_EPOCHS,
    DEFAULT_SWEEP_P,
    DEFAULT_SWEEP_R,
    INIT_CHECKPOINT,
    INIT_RANDOM,
    LABEL_FRACTIONS,
)
from ..data.models import DatasetManifest, SplitPlan
from ..data.split import balanced_subset, split_by_patient
from ..data.store import TextureStore
from ..error_handler import CTLError, SweepError, handle_errors
from ..nn.checkpoint import ModelCheckpoint
from ..pretrain.trainer import pretrain

_LOGGER = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"
ROW_RUN = "run"
ROW_SUMMARY = "summary"


@dataclass
class SweepResult:
    """One row per grid cell or per run, in grid order."""
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def write_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.9g")
        _LOGGER.info("Wrote %s sweep rows to %s", len(self.rows), path)

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [row for row in self.rows if row.get("status") == STATUS_FAILED]


def _mean_std(values: Sequence[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    defined = np.array([v for v in values if v is not None], dtype=np.float64)
    mean = float(defined.mean()) if defined.size else None
    std = float(defined.std(ddof=1)) if defined.size > 1 else None
    return mean, std


def _train_and_evaluate(manifest: DatasetManifest, plan: SplitPlan, store: TextureStore,
                        finetune_config: FinetuneConfig, seed: int,
                        checkpoint: Optional[ModelCheckpoint]) -> Dict[str, Optional[float]]:
    network = build_downstream(seed, checkpoint, finetune_config.freeze_encoder)
    finetune(network, manifest.entries_for(plan.train_patient_ids), store, finetune_config, seed)
    return evaluate_entries(network, manifest.entries_for(plan.test_patient_ids),
                            store).fold_metrics()


def _timed(cell: Callable[[], Optional[Dict[str, Any]]], label: str) -> Dict[str, Any]:
    started = time.monotonic()
    outcome = handle_errors((CTLError,), default_return=None)(cell)()
    wall_time = time.monotonic() - started
    _LOGGER.info("Sweep cell %s finished in %.1fs", label, wall_time)
    if outcome is None:
        return {"status": STATUS_FAILED, "wall_time": wall_time}
    return {"status": STATUS_OK, "wall_time": wall_time, **outcome}


def _lbp_cell(manifest: DatasetManifest, plan: SplitPlan, r: float, p: int,
              seeds: Sequence[int], pretrain_config: PretrainConfig,
              finetune_config: FinetuneConfig) -> Dict[str, Any]:
    def run() -> Dict[str, Any]:
        lbp = LbpConfig(p=int(p), r=float(r)).validate()
        store = TextureStore(manifest, lbp)
        results = []
        for seed in seeds:
            trained = pretrain(manifest, pretrain_config, lbp, seed, store=store,
                               patient_ids=plan.train_patient_ids)
            results.append(_train_and_evaluate(manifest, plan, store, finetune_config, seed,
                                               trained.checkpoint))
        accuracy_mean, accuracy_std = _mean_std([m["accuracy"] for m in results])
        auc_mean, auc_std = _mean_std([m["auc"] for m in results])
        return {"accuracy_mean": accuracy_mean, "accuracy_std": accuracy_std,
                "auc_mean": auc_mean, "auc_std": auc_std}

    row = {"r": r, "p": p, "seeds": len(seeds)}
    row.update(_timed(run, f"R={r} P={p}"))
    return row


def lbp_sweep(manifest: DatasetManifest, r_values: Sequence[float] = DEFAULT_SWEEP_R,
              p_values: Sequence[int] = DEFAULT_SWEEP_P, epochs: int = DEFAULT_SWEEP_EPOCHS,
              seed: int = 0, seeds: Optional[Sequence[int]] = None,
              pretrain_config: Optional[PretrainConfig] = None,
              finetune_config: Optional[FinetuneConfig] = None,
              ratio: float = DEFAULT_SPLIT_RATIO, jobs: int = 1) -> SweepResult:
    """Short pretrain + fine-tune + test evaluation for every (R, P) cell.

    Every cell sees the same class-balanced subset, split and seeds. Cells with an
    invalid LBP configuration are reported as failed.
    """
    if not len(r_values) or not len(p_values):
        raise SweepError("The (R, P) grid is empty")
    seeds = list(seeds) if seeds else [seed]
    pretrain_config = replace(pretrain_config or PretrainConfig(), epochs=epochs)
    finetune_config = replace(finetune_config or FinetuneConfig(), init=INIT_CHECKPOINT)
    balanced = manifest.subset(balanced_subset(manifest.entries, seed))
    plan = split_by_patient(balanced, ratio, seed)
    cells = [(r, p) for r in r_values for p in p_values]
    _LOGGER.info("LBP sweep over %s cells on %s balanced patches", len(cells), len(balanced))
    run = delayed(_lbp_cell) if jobs > 1 else _lbp_cell
    calls = [run(balanced, plan, r, p, seeds, pretrain_config, finetune_config)
             for r, p in cells]
    rows = Parallel(n_jobs=jobs)(calls) if jobs > 1 else calls
    return SweepResult(list(rows))


def _fraction_run(manifest: DatasetManifest, plan: SplitPlan, lbp: LbpConfig,
                  fraction: float, init: str, seed: int, finetune_config: FinetuneConfig,
                  checkpoint: Optional[ModelCheckpoint]) -> Dict[str, Any]:
    def run() -> Dict[str, Any]:
        config = replace(finetune_config, label_fraction=fraction, init=init)
        metrics = _train_and_evaluate(
            manifest, plan, TextureStore(manifest, lbp), config, seed,
            checkpoint if init == INIT_CHECKPOINT else None,
        )
        return {"accuracy": metrics["accuracy"], "auc": metrics["auc"]}

    row = {"row": ROW_RUN, "fraction": fraction, "init": init, "seed": seed}
    row.update(_timed(run, f"fraction={fraction} init={init} seed={seed}"))
    return row


def label_fraction_study(manifest: DatasetManifest, checkpoint: Optional[ModelCheckpoint],
                         fractions: Sequence[float] = LABEL_FRACTIONS,
                         seeds: Sequence[int] = (0, 1, 2),
                         finetune_config: Optional[FinetuneConfig] = None,
                         inits: Sequence[str] = (INIT_RANDOM, INIT_CHECKPOINT),
                         ratio: float = DEFAULT_SPLIT_RATIO, split_seed: int = 0,
                         jobs: int = 1) -> SweepResult:
    """Paired random-init and checkpoint-init runs per label fraction.

    All runs share one patient split, so both arms of a fraction see the same test set.
    Per-seed rows are followed by one summary row per (fraction, init).
    """
    if checkpoint is None and INIT_CHECKPOINT in inits:
        raise SweepError("The checkpoint arm needs a pretrained checkpoint")
    if not len(fractions) or not len(seeds):
        raise SweepError("Label-fraction study needs fractions and seeds")
    lbp = checkpoint_lbp(checkpoint) if checkpoint is not None else LbpConfig()
    finetune_config = finetune_config or FinetuneConfig()
    plan = split_by_patient(manifest, ratio, split_seed)
    grid = [(f, i, s) for f in fractions for i in inits for s in seeds]
    run = delayed(_fraction_run) if jobs > 1 else _fraction_run
    calls = [run(manifest, plan, lbp, f, i, s, finetune_config, checkpoint) for f, i, s in grid]
    runs = list(Parallel(n_jobs=jobs)(calls) if jobs > 1 else calls)

    rows = []
    for fraction in fractions:
        for init in inits:
            group = [r for r in runs if r["fraction"] == fraction and r["init"] == init]
            rows.extend(group)
            accuracy_mean, accuracy_std = _mean_std([r.get("accuracy") for r in group])
            auc_mean, auc_std = _mean_std([r.get("auc") for r in group])
            rows.append({
                "row": ROW_SUMMARY, "fraction": fraction, "init": init, "seed": None,
                "status": STATUS_OK if accuracy_mean is not None else STATUS_FAILED,
                "accuracy": accuracy_mean, "accuracy_std": accuracy_std,
                "auc": auc_mean, "auc_std": auc_std,
                "wall_time": float(sum(r["wall_time"] for r in group)),
            })
    return SweepResult(rows)
