"""Command-line entry point."""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import CHECKPOINT_FORMAT, __version__
from .commands import (
    CMD_CAM,
    CMD_COMPARE,
    CMD_CROSSVAL,
    CMD_EVAL,
    CMD_EXTRACT_LBP,
    CMD_FINETUNE,
    CMD_GEN_DATA,
    CMD_GRADCHECK,
    CMD_PREDICT,
    CMD_PREDICT_VOLUME,
    CMD_PRETRAIN,
    CMD_SIMILARITY,
    CMD_STUDY_LABELS,
    CMD_SWEEP_LBP,
    CMD_VOTE,
    COMMANDS,
    PATIENTS_ALL,
    PATIENTS_DOWNSTREAM,
    PATIENTS_HOLDOUT,
    PATIENTS_TRAIN,
    validate_command,
)
from .config import RunConfig, merge_config
from .const import CLASS_NAMES, TASK_BINARY, TASK_FIVE_CLASS
from .error_handler import EXIT_USAGE, ErrorHandler

_LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _csv_of(kind: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(text: str) -> List[Any]:
        try:
            return [kind(item) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}: {e}") from e

    return parse


def _flag(parser: argparse.ArgumentParser, name: str, dest: str, **kwargs) -> None:
    """Flags default to None so that only given values override the config file."""
    parser.add_argument(name, dest=dest, default=None, **kwargs)


def _switch(parser: argparse.ArgumentParser, name: str, dest: str, text: str) -> None:
    parser.add_argument(name, dest=dest, action="store_true", default=None, help=text)


def _lbp_flags(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--lbp-p", "lbp.p", type=int, help="LBP sampling points")
    _flag(parser, "--lbp-r", "lbp.r", type=float, help="LBP radius in pixels")


def _finetune_flags(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--epochs", "finetune.epochs", type=int)
    _flag(parser, "--batch", "finetune.batch_size", type=int)
    _flag(parser, "--lr", "finetune.learning_rate", type=float)
    _flag(parser, "--momentum", "finetune.momentum", type=float)
    _flag(parser, "--label-fraction", "finetune.label_fraction", type=float)
    _switch(parser, "--freeze-encoder", "finetune.freeze_encoder",
            "train only the classifier head")


def _vote_flags(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--threshold", "vote.threshold", type=float, help="voting threshold")
    _flag(parser, "--run", "vote.run_length", type=int, help="minimum run length")


def _gen_data(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--out", "paths.out", required=True, help="corpus directory")
    _flag(parser, "--patients-per-class", "corpus.patients_per_class", type=int)
    _flag(parser, "--frames", "corpus.frames_per_volume", type=int)
    _flag(parser, "--frame-width", "corpus.frame_width", type=int)
    _flag(parser, "--patch-size", "corpus.patch_size", type=int)
    _flag(parser, "--stride", "corpus.stride", type=int)
    _flag(parser, "--lesion-volumes", "corpus.lesion_volumes", type=int)


def _extract_lbp(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    _flag(source, "--image", "paths.image", help="single PGM patch")
    _flag(source, "--manifest", "paths.manifest", help="dataset manifest")
    _flag(parser, "--out", "paths.out", required=True, help="output directory")
    _lbp_flags(parser)


def _pretrain(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--out", "paths.out", required=True, help="checkpoint path")
    _flag(parser, "--epochs", "pretrain.epochs", type=int)
    _flag(parser, "--batch", "pretrain.batch_size", type=int)
    _flag(parser, "--tau", "pretrain.temperature", type=float)
    _flag(parser, "--lr", "pretrain.learning_rate", type=float)
    _flag(parser, "--weight-decay", "pretrain.weight_decay", type=float)
    _switch(parser, "--free-rotation", "pretrain.augment.free_rotation",
            "add arbitrary-angle rotations to the augmentations")
    _flag(parser, "--patients", "options.patients",
          choices=[PATIENTS_ALL, PATIENTS_TRAIN, PATIENTS_HOLDOUT])
    _flag(parser, "--split-ratio", "options.split_ratio", type=float)
    _lbp_flags(parser)


def _finetune(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--out", "paths.out", required=True, help="model checkpoint path")
    _flag(parser, "--init", "paths.init", help="pretrained checkpoint or 'random'")
    _flag(parser, "--patients", "options.patients",
          choices=[PATIENTS_TRAIN, PATIENTS_DOWNSTREAM])
    _flag(parser, "--split-ratio", "options.split_ratio", type=float)
    _finetune_flags(parser)
    _lbp_flags(parser)


def _predict(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--model", "paths.model", required=True)
    _flag(parser, "--image", "paths.image", required=True)


def _predict_volume(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--model", "paths.model", required=True)
    _flag(parser, "--frames", "paths.frames", required=True, help="directory of PGM frames")
    _flag(parser, "--out", "paths.out", required=True, help="heat matrix CSV")
    _flag(parser, "--heat", "paths.heat", help="colormapped heat matrix PPM")
    _flag(parser, "--scale", "options.scale", type=int, help="pixels per heat cell")
    _flag(parser, "--patch-size", "window.patch_size", type=int)
    _flag(parser, "--stride", "window.stride", type=int)
    _vote_flags(parser)


def _vote(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--matrix", "paths.matrix", required=True, help="patch prediction CSV")
    _vote_flags(parser)


def _eval(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--pred", "paths.pred", required=True)
    _flag(parser, "--truth", "paths.truth", required=True)
    _flag(parser, "--task", "options.task", choices=[TASK_BINARY, TASK_FIVE_CLASS])
    _flag(parser, "--threshold", "options.threshold", type=float)
    _flag(parser, "--confidence", "options.confidence", type=float)


def _cam(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--model", "paths.model", required=True)
    _flag(parser, "--image", "paths.image", required=True)
    _flag(parser, "--class", "options.class_index", type=int, required=True,
          help="class index 0-4 (" + ", ".join(CLASS_NAMES) + ")")
    _flag(parser, "--alpha", "options.alpha", type=float)
    _flag(parser, "--out", "paths.out", required=True, help="overlay PPM")


def _sweep_lbp(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--r", "options.r", type=_csv_of(float), help="comma-separated radii")
    _flag(parser, "--p", "options.p", type=_csv_of(int), help="comma-separated point counts")
    _flag(parser, "--epochs", "options.epochs", type=int, help="pretraining epochs per cell")
    _flag(parser, "--finetune-epochs", "finetune.epochs", type=int)
    _flag(parser, "--seeds", "options.seeds", type=int, help="seeds per cell")
    _flag(parser, "--out", "paths.out", required=True, help="sweep CSV")


def _study_labels(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--ckpt", "paths.ckpt", required=True, help="pretrained checkpoint")
    _flag(parser, "--fractions", "options.fractions", type=_csv_of(float))
    _flag(parser, "--seeds", "options.seeds", type=int, help="seeds per arm")
    _flag(parser, "--epochs", "finetune.epochs", type=int)
    _flag(parser, "--out", "paths.out", required=True, help="study CSV")


def _gradcheck(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--samples", "options.samples", type=int,
          help="coordinates checked per parameter")


def _similarity(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--pred", "paths.pred", required=True, help="five-class predictions CSV")
    _flag(parser, "--truth-label", "options.truth_label", required=True, choices=CLASS_NAMES)
    _flag(parser, "--predicted-label", "options.predicted_label", required=True,
          choices=CLASS_NAMES)
    _lbp_flags(parser)


def _crossval(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--manifest", "paths.manifest", required=True)
    _flag(parser, "--init", "paths.init", help="pretrained checkpoint or 'random'")
    _flag(parser, "--folds", "options.folds", type=int)
    _flag(parser, "--split-ratio", "options.split_ratio", type=float)
    _flag(parser, "--out", "paths.out", required=True, help="fold table CSV")
    _finetune_flags(parser)
    _lbp_flags(parser)


def _compare(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "--a", "paths.a", required=True, help="first fold table")
    _flag(parser, "--b", "paths.b", required=True, help="second fold table")
    _flag(parser, "--metric", "options.metric")


SUBCOMMANDS = {
    CMD_GEN_DATA: (_gen_data, "generate the synthetic corpus"),
    CMD_EXTRACT_LBP: (_extract_lbp, "write LBP codes and histograms"),
    CMD_PRETRAIN: (_pretrain, "contrastive pretraining"),
    CMD_FINETUNE: (_finetune, "five-class fine-tuning"),
    CMD_PREDICT: (_predict, "classify one patch"),
    CMD_PREDICT_VOLUME: (_predict_volume, "score a volume and vote"),
    CMD_VOTE: (_vote, "cross-shaped vote over a prediction matrix"),
    CMD_EVAL: (_eval, "metrics report for predictions"),
    CMD_CAM: (_cam, "class activation map overlay"),
    CMD_SWEEP_LBP: (_sweep_lbp, "LBP radius and point-count sweep"),
    CMD_STUDY_LABELS: (_study_labels, "label-fraction study"),
    CMD_GRADCHECK: (_gradcheck, "finite-difference gradient checks"),
    CMD_SIMILARITY: (_similarity, "texture similarity of misclassified patches"),
    CMD_CROSSVAL: (_crossval, "cross-validated fine-tuning"),
    CMD_COMPARE: (_compare, "signed-rank comparison of two fold tables"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctl", description="Contrastive texture learning")
    parser.add_argument(
        "--version", action="version",
        version=f"ctl {__version__} (checkpoint format {CHECKPOINT_FORMAT})",
    )
    parser.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS,
                        type=str.upper)
    common = argparse.ArgumentParser(add_help=False)
    _flag(common, "--seed", "seed", type=int, help="root seed of every random stream")
    _flag(common, "--jobs", "jobs", type=int, help="worker processes")
    _flag(common, "--config", "config_file", help="JSON run configuration")
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    for name, (add_flags, summary) in SUBCOMMANDS.items():
        add_flags(subparsers.add_parser(name, parents=[common], help=summary))
    return parser


def overrides_from(namespace: argparse.Namespace) -> Dict[str, Any]:
    """Nest dotted flag destinations into a config dictionary."""
    nested: Dict[str, Any] = {}
    for dest, value in vars(namespace).items():
        if value is None or dest in ("config_file", "log_level"):
            continue
        node = nested
        *parents, leaf = dest.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return nested


def resolve_config(namespace: argparse.Namespace) -> RunConfig:
    """Flags over the --config file over defaults."""
    base: Dict[str, Any] = {}
    if namespace.config_file:
        base = RunConfig.load(Path(namespace.config_file)).to_dict()
    config = RunConfig.from_dict(merge_config(base, overrides_from(namespace)))
    return validate_command(config)


@ErrorHandler.exit_code
def run(namespace: argparse.Namespace) -> Optional[int]:
    config = resolve_config(namespace)
    _LOGGER.debug("Running %s with seed %s", config.command, config.seed)
    return COMMANDS[config.command](config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    logging.basicConfig(level=namespace.log_level, format=LOG_FORMAT, stream=sys.stderr)
    return run(namespace)


if __name__ == "__main__":
    sys.exit(main())
