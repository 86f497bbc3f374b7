"""Command handlers for the ctl command line."""
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import voluptuous as vol

from .cam.cam import compute_cam, emit_overlay, interior
from .classifier.analysis import misclassified_similarity
from .classifier.model import (
    build_downstream,
    checkpoint_lbp,
    load_model,
    model_checkpoint,
    predict_patch,
)
from .classifier.trainer import cross_validate, evaluate_entries, finetune
from .config import RunConfig
from .const import (
    CLASS_NAMES,
    DEFAULT_BINARY_THRESHOLD,
    DEFAULT_CONFIDENCE,
    DEFAULT_FOLDS,
    DEFAULT_PRETRAIN_HOLDOUT,
    DEFAULT_SPLIT_RATIO,
    DEFAULT_SWEEP_EPOCHS,
    DEFAULT_SWEEP_P,
    DEFAULT_SWEEP_R,
    INIT_CHECKPOINT,
    INIT_RANDOM,
    LABEL_FRACTIONS,
    TASK_BINARY,
    TASK_FIVE_CLASS,
)
from .data.imageio import read_pgm
from .data.models import DatasetManifest
from .data.split import holdout_pretrain_patients, plan_splits, split_by_patient
from .data.store import TextureStore
from .data.synth import generate_corpus
from .error_handler import EXIT_FAILURE, EXIT_OK, ConfigError
from .metrics.report import (
    align,
    compare_runs,
    evaluate_run,
    read_fold_table,
    read_predictions_csv,
    read_truth_csv,
    write_fold_table,
)
from .nn.checkpoint import ModelCheckpoint
from .nn.gradcheck import run_gradcheck_suite
from .pretrain.trainer import pretrain
from .sweep.harness import label_fraction_study, lbp_sweep
from .texture.histogram import (
    texture_histogram,
    write_codes_csv,
    write_histograms_csv,
    write_normalized_pgm16,
)
from .texture.lbp import extract_texture_map
from .volume.vote import (
    PatchPredictionMatrix,
    cross_vote,
    heat_matrix_export,
    load_frames,
    predict_volume,
)

_LOGGER = logging.getLogger(__name__)

CMD_GEN_DATA = "gen-data"
CMD_EXTRACT_LBP = "extract-lbp"
CMD_PRETRAIN = "pretrain"
CMD_FINETUNE = "finetune"
CMD_PREDICT = "predict"
CMD_PREDICT_VOLUME = "predict-volume"
CMD_VOTE = "vote"
CMD_EVAL = "eval"
CMD_CAM = "cam"
CMD_SWEEP_LBP = "sweep-lbp"
CMD_STUDY_LABELS = "study-labels"
CMD_GRADCHECK = "gradcheck"
CMD_SIMILARITY = "similarity"
CMD_CROSSVAL = "crossval"
CMD_COMPARE = "compare"

PATIENTS_ALL = "all"
PATIENTS_TRAIN = "train"
PATIENTS_HOLDOUT = "holdout"
PATIENTS_DOWNSTREAM = "downstream"

RUN_SUFFIX = ".run.json"

_PATH = vol.All(str, vol.Length(min=1))
_UNIT = vol.All(vol.Coerce(float), vol.Range(min=0, max=1))
_FRACTION = vol.All(vol.Coerce(float), vol.Range(min=0, max=1, min_included=False))


def _schema(paths: Dict, options: Optional[Dict] = None) -> vol.Schema:
    return vol.Schema({
        vol.Required("paths"): vol.Schema(paths, extra=vol.ALLOW_EXTRA),
        vol.Required("options"): vol.Schema(options or {}, extra=vol.ALLOW_EXTRA),
    })


COMMAND_SCHEMAS = {
    CMD_GEN_DATA: _schema({vol.Required("out"): _PATH}),
    CMD_EXTRACT_LBP: _schema(
        {vol.Required("out"): _PATH, vol.Optional("image"): vol.Any(None, _PATH),
         vol.Optional("manifest"): vol.Any(None, _PATH)},
    ),
    CMD_PRETRAIN: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("out"): _PATH},
        {vol.Optional("patients"): vol.In([PATIENTS_ALL, PATIENTS_TRAIN, PATIENTS_HOLDOUT]),
         vol.Optional("split_ratio"): _FRACTION},
    ),
    CMD_FINETUNE: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("out"): _PATH,
         vol.Optional("init"): vol.Any(None, _PATH)},
        {vol.Optional("patients"): vol.In([PATIENTS_TRAIN, PATIENTS_DOWNSTREAM]),
         vol.Optional("split_ratio"): _FRACTION},
    ),
    CMD_PREDICT: _schema({vol.Required("model"): _PATH, vol.Required("image"): _PATH}),
    CMD_PREDICT_VOLUME: _schema(
        {vol.Required("model"): _PATH, vol.Required("frames"): _PATH,
         vol.Required("out"): _PATH, vol.Optional("heat"): vol.Any(None, _PATH)},
        {vol.Optional("scale"): vol.All(vol.Coerce(int), vol.Range(min=1))},
    ),
    CMD_VOTE: _schema({vol.Required("matrix"): _PATH}),
    CMD_EVAL: _schema(
        {vol.Required("pred"): _PATH, vol.Required("truth"): _PATH},
        {vol.Optional("task"): vol.In([TASK_BINARY, TASK_FIVE_CLASS]),
         vol.Optional("threshold"): _UNIT,
         vol.Optional("confidence"): vol.All(vol.Coerce(float), vol.Range(0, 1, False, False))},
    ),
    CMD_CAM: _schema(
        {vol.Required("model"): _PATH, vol.Required("image"): _PATH, vol.Required("out"): _PATH},
        {vol.Required("class_index"): vol.All(vol.Coerce(int), vol.Range(0, len(CLASS_NAMES) - 1)),
         vol.Optional("alpha"): _UNIT},
    ),
    CMD_SWEEP_LBP: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("out"): _PATH},
        {vol.Optional("r"): [vol.Coerce(float)], vol.Optional("p"): [vol.Coerce(int)],
         vol.Optional("epochs"): vol.All(vol.Coerce(int), vol.Range(min=0)),
         vol.Optional("seeds"): vol.All(vol.Coerce(int), vol.Range(min=1))},
    ),
    CMD_STUDY_LABELS: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("ckpt"): _PATH, vol.Required("out"): _PATH},
        {vol.Optional("fractions"): [_FRACTION],
         vol.Optional("seeds"): vol.All(vol.Coerce(int), vol.Range(min=1))},
    ),
    CMD_GRADCHECK: _schema(
        {}, {vol.Optional("samples"): vol.All(vol.Coerce(int), vol.Range(min=1))},
    ),
    CMD_SIMILARITY: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("pred"): _PATH},
        {vol.Required("truth_label"): vol.In(CLASS_NAMES),
         vol.Required("predicted_label"): vol.In(CLASS_NAMES)},
    ),
    CMD_CROSSVAL: _schema(
        {vol.Required("manifest"): _PATH, vol.Required("out"): _PATH,
         vol.Optional("init"): vol.Any(None, _PATH)},
        {vol.Optional("folds"): vol.All(vol.Coerce(int), vol.Range(min=2)),
         vol.Optional("split_ratio"): _FRACTION},
    ),
    CMD_COMPARE: _schema(
        {vol.Required("a"): _PATH, vol.Required("b"): _PATH},
        {vol.Optional("metric"): str},
    ),
}


def validate_command(config: RunConfig) -> RunConfig:
    """Check the paths and options a command needs."""
    schema = COMMAND_SCHEMAS[config.command]
    try:
        schema({"paths": config.paths, "options": config.options})
    except vol.Invalid as e:
        raise ConfigError(f"Invalid arguments for {config.command}: {e}") from e
    return config


def run_config_path(output: Path) -> Path:
    output = Path(output)
    return output.parent / (output.name + RUN_SUFFIX)


def _save_run(config: RunConfig, output: Path) -> None:
    path = run_config_path(output)
    config.save(path)
    _LOGGER.info("Wrote resolved configuration to %s", path)


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def emit(data: Any) -> None:
    """One JSON document on stdout."""
    print(json.dumps(data, sort_keys=True, default=_json_default), file=sys.stdout)


def _option(config: RunConfig, name: str, default: Any) -> Any:
    value = config.options.get(name)
    return default if value is None else value


def _load_init(config: RunConfig) -> Optional[ModelCheckpoint]:
    source = config.paths.get("init")
    if not source or source == INIT_RANDOM:
        return None
    return ModelCheckpoint.load(Path(source))


def _with_checkpoint_lbp(config: RunConfig, checkpoint: Optional[ModelCheckpoint]) -> RunConfig:
    if checkpoint is None:
        return config
    lbp = checkpoint_lbp(checkpoint, config.lbp)
    if lbp != config.lbp:
        _LOGGER.warning("Using the checkpoint's LBP settings P=%s R=%s", lbp.p, lbp.r)
    return replace(config, lbp=lbp)


def cmd_gen_data(config: RunConfig) -> None:
    out = Path(config.paths["out"])
    manifest = generate_corpus(config.seed, out, config.corpus, config.jobs)
    _LOGGER.info("Generated %s patches in %s", len(manifest), out)
    _save_run(config, out)


def cmd_extract_lbp(config: RunConfig) -> None:
    lbp = config.lbp.validate()
    out = Path(config.paths["out"])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    if config.paths.get("image"):
        image_path = Path(config.paths["image"])
        texture = extract_texture_map(read_pgm(image_path), lbp)
        write_codes_csv(texture, out / f"{image_path.stem}_codes.csv")
        write_normalized_pgm16(texture, out / f"{image_path.stem}_normalized.pgm")
        rows.append((image_path.stem, texture_histogram(texture)))
    elif config.paths.get("manifest"):
        manifest = DatasetManifest.load(Path(config.paths["manifest"]))
        store = TextureStore(manifest, lbp, config.jobs)
        for entry, image in zip(manifest.entries, store.get_images(manifest.entries)):
            rows.append((entry.uid, texture_histogram(extract_texture_map(image, lbp))))
    else:
        raise ConfigError("extract-lbp needs --image or --manifest")
    write_histograms_csv(rows, out / "histograms.csv", lbp.p)
    _save_run(config, out)


def _pretrain_patients(config: RunConfig, manifest: DatasetManifest) -> Optional[List[str]]:
    patients = _option(config, "patients", PATIENTS_ALL)
    if patients == PATIENTS_ALL:
        return None
    plan = split_by_patient(manifest, _option(config, "split_ratio", DEFAULT_SPLIT_RATIO),
                            config.seed)
    if patients == PATIENTS_TRAIN:
        return plan.train_patient_ids
    holdout, _ = holdout_pretrain_patients(plan.train_patient_ids, DEFAULT_PRETRAIN_HOLDOUT,
                                           config.seed)
    return holdout


def cmd_pretrain(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    out = Path(config.paths["out"])
    result = pretrain(manifest, config.pretrain, config.lbp, config.seed,
                      patient_ids=_pretrain_patients(config, manifest), jobs=config.jobs)
    result.checkpoint.save(out)
    result.write_trajectory(out.parent / (out.name + ".loss.csv"))
    _save_run(config, out)


def cmd_finetune(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    out = Path(config.paths["out"])
    checkpoint = _load_init(config)
    config = _with_checkpoint_lbp(config, checkpoint)
    settings = replace(config.finetune,
                       init=INIT_CHECKPOINT if checkpoint is not None else INIT_RANDOM)
    plan = split_by_patient(manifest, _option(config, "split_ratio", DEFAULT_SPLIT_RATIO),
                            config.seed)
    train_ids = plan.train_patient_ids
    if _option(config, "patients", PATIENTS_TRAIN) == PATIENTS_DOWNSTREAM:
        _, train_ids = holdout_pretrain_patients(train_ids, DEFAULT_PRETRAIN_HOLDOUT,
                                                 config.seed)
    store = TextureStore(manifest, config.lbp, config.jobs)
    network = build_downstream(config.seed, checkpoint, settings.freeze_encoder)
    result = finetune(network, manifest.entries_for(train_ids), store, settings, config.seed)
    model_checkpoint(network, config.seed, config.lbp, optimizer=result.optimizer,
                     history=result.history.to_dict()).save(out)
    result.history.write_csv(out.parent / (out.name + ".history.csv"))

    evaluation = evaluate_entries(network, manifest.entries_for(plan.test_patient_ids), store)
    evaluation.write(out.parent / (out.name + ".predictions.csv"),
                     out.parent / (out.name + ".truth.csv"))
    report = {task: evaluation.report(task).to_dict() for task in (TASK_FIVE_CLASS, TASK_BINARY)}
    (out.parent / (out.name + ".eval.json")).write_text(
        json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8",
    )
    _LOGGER.info("Test accuracy %.4f on %s patches", evaluation.accuracy,
                 len(evaluation.sample_ids))
    _save_run(config, out)


def cmd_predict(config: RunConfig) -> None:
    network, lbp = load_model(Path(config.paths["model"]))
    emit(predict_patch(network, read_pgm(Path(config.paths["image"])), lbp).to_dict())


def cmd_predict_volume(config: RunConfig) -> None:
    vote = config.vote.validate()
    network, lbp = load_model(Path(config.paths["model"]))
    frames_dir = Path(config.paths["frames"])
    out = Path(config.paths["out"])
    prediction = predict_volume(network, load_frames(frames_dir), lbp, vote, config.window,
                                volume_id=frames_dir.name, jobs=config.jobs)
    heat = config.paths.get("heat")
    heat_matrix_export(prediction.matrix, out, Path(heat) if heat else None,
                       int(_option(config, "scale", 1)))
    emit(prediction.result.to_dict())
    _save_run(config, out)


def cmd_vote(config: RunConfig) -> None:
    matrix = PatchPredictionMatrix.from_csv(Path(config.paths["matrix"]))
    emit(cross_vote(matrix, config.vote.validate()).to_dict())


def cmd_eval(config: RunConfig) -> None:
    sample_ids, values = read_predictions_csv(Path(config.paths["pred"]))
    truths = align(sample_ids, read_truth_csv(Path(config.paths["truth"])))
    report = evaluate_run(values, truths, _option(config, "task", TASK_FIVE_CLASS),
                          float(_option(config, "threshold", DEFAULT_BINARY_THRESHOLD)),
                          float(_option(config, "confidence", DEFAULT_CONFIDENCE)))
    emit(report.to_dict())


def cmd_cam(config: RunConfig) -> None:
    network, lbp = load_model(Path(config.paths["model"]))
    image = read_pgm(Path(config.paths["image"]))
    out = Path(config.paths["out"])
    cam = compute_cam(network, image, int(config.options["class_index"]), lbp)
    emit_overlay(interior(image, lbp), cam, float(_option(config, "alpha", 0.5)), out)
    _save_run(config, out)


def cmd_sweep_lbp(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    out = Path(config.paths["out"])
    count = int(_option(config, "seeds", 1))
    result = lbp_sweep(
        manifest,
        r_values=_option(config, "r", list(DEFAULT_SWEEP_R)),
        p_values=_option(config, "p", list(DEFAULT_SWEEP_P)),
        epochs=int(_option(config, "epochs", DEFAULT_SWEEP_EPOCHS)),
        seed=config.seed,
        seeds=[config.seed + k for k in range(count)],
        pretrain_config=config.pretrain,
        finetune_config=config.finetune,
        jobs=config.jobs,
    )
    result.write_csv(out)
    _save_run(config, out)


def cmd_study_labels(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    checkpoint = ModelCheckpoint.load(Path(config.paths["ckpt"]))
    out = Path(config.paths["out"])
    count = int(_option(config, "seeds", 3))
    result = label_fraction_study(
        manifest, checkpoint,
        fractions=_option(config, "fractions", list(LABEL_FRACTIONS)),
        seeds=[config.seed + k for k in range(count)],
        finetune_config=config.finetune,
        split_seed=config.seed,
        jobs=config.jobs,
    )
    result.write_csv(out)
    _save_run(config, out)


def cmd_gradcheck(config: RunConfig) -> int:
    results = run_gradcheck_suite(config.seed, int(_option(config, "samples", 12)))
    emit([r.to_dict() for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def cmd_similarity(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    sample_ids, values = read_predictions_csv(Path(config.paths["pred"]))
    if np.ndim(values) != 2:
        raise ConfigError("Similarity analysis needs five-class predictions")
    predictions = dict(zip(sample_ids, np.argmax(values, axis=1)))
    distribution = misclassified_similarity(manifest, predictions,
                                            config.options["truth_label"],
                                            config.options["predicted_label"], config.lbp)
    emit(distribution.to_dict())


def cmd_crossval(config: RunConfig) -> None:
    manifest = DatasetManifest.load(Path(config.paths["manifest"]))
    out = Path(config.paths["out"])
    checkpoint = _load_init(config)
    config = _with_checkpoint_lbp(config, checkpoint)
    settings = replace(config.finetune,
                       init=INIT_CHECKPOINT if checkpoint is not None else INIT_RANDOM)
    plan = plan_splits(manifest, _option(config, "split_ratio", DEFAULT_SPLIT_RATIO),
                       int(_option(config, "folds", DEFAULT_FOLDS)), config.seed)
    result = cross_validate(manifest, plan, settings, config.lbp, config.seed, checkpoint,
                            jobs=config.jobs)
    write_fold_table(result.folds, out)
    emit(result.summary)
    _save_run(config, out)


def cmd_compare(config: RunConfig) -> None:
    metric = _option(config, "metric", "accuracy")
    first = read_fold_table(Path(config.paths["a"]))
    second = read_fold_table(Path(config.paths["b"]))
    for table in (first, second):
        if metric not in table.columns:
            raise ConfigError(f"Fold table lacks metric column {metric!r}")
    result = compare_runs(first[metric].to_numpy(), second[metric].to_numpy())
    emit({"metric": metric, **result.to_dict()})


COMMANDS: Dict[str, Callable[[RunConfig], Optional[int]]] = {
    CMD_GEN_DATA: cmd_gen_data,
    CMD_EXTRACT_LBP: cmd_extract_lbp,
    CMD_PRETRAIN: cmd_pretrain,
    CMD_FINETUNE: cmd_finetune,
    CMD_PREDICT: cmd_predict,
    CMD_PREDICT_VOLUME: cmd_predict_volume,
    CMD_VOTE: cmd_vote,
    CMD_EVAL: cmd_eval,
    CMD_CAM: cmd_cam,
    CMD_SWEEP_LBP: cmd_sweep_lbp,
    CMD_STUDY_LABELS: cmd_study_labels,
    CMD_GRADCHECK: cmd_gradcheck,
    CMD_SIMILARITY: cmd_similarity,
    CMD_CROSSVAL: cmd_crossval,
    CMD_COMPARE: cmd_compare,
}
