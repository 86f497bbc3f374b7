"""Error handling for the contrastive texture learning package."""
import json
import logging
import sys
from functools import wraps
from typing import Type, Tuple

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class CTLError(Exception):
    """Base exception for the package."""

    code = "ctl_error"

    def __init__(self, message: str, code: str = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ShapeError(CTLError):
    """Tensor or layer shape mismatch."""

    code = "shape_mismatch"


class BackwardError(CTLError):
    """Backward pass requested without a matching forward pass."""

    code = "backward_before_forward"


class OptimizerError(CTLError):
    """Optimizer state does not match the parameters."""

    code = "optimizer_state"


class CheckpointError(CTLError):
    """Checkpoint file could not be read or applied."""

    code = "checkpoint"


class TextureError(CTLError):
    """Invalid LBP input or configuration."""

    code = "texture"


class DataError(CTLError):
    """Corpus, manifest or image file errors."""

    code = "data"


class SplitError(CTLError):
    """Patient splitting, folding or resampling errors."""

    code = "split"


class LossError(CTLError):
    """Invalid loss inputs."""

    code = "loss"


class VoteError(CTLError):
    """Invalid prediction matrix or vote configuration."""

    code = "vote"


class MetricError(CTLError):
    """Invalid evaluation inputs."""

    code = "metric"


class StatisticsError(CTLError):
    """Invalid statistical test inputs."""

    code = "statistics"


class ConfigError(CTLError):
    """Invalid configuration."""

    code = "config"


class CamError(CTLError):
    """Class activation map errors."""

    code = "cam"


class SweepError(CTLError):
    """Ablation harness errors."""

    code = "sweep"


def handle_errors(
    exceptions: Tuple[Type[Exception], ...] = (CTLError,),
    default_return=None
):
    """Decorator for error handling."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except exceptions as e:
                _LOGGER.warning(
                    "Error in %s: %s",
                    func.__name__,
                    str(e)
                )
                return default_return
        return wrapper
    return decorator


def error_line(error: CTLError) -> str:
    """Single-line machine-parsable error record."""
    return json.dumps({"error": error.code, "message": str(error)}, sort_keys=True)


class ErrorHandler:
    """Centralized error handler for command entry points."""

    @staticmethod
    def exit_code(func):
        """Map package errors to exit code 1 with one JSON line on stderr."""
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                result = func(*args, **kwargs)
                return EXIT_OK if result is None else result
            except CTLError as e:
                _LOGGER.error("Command %s failed: %s", func.__name__, e)
                print(error_line(e), file=sys.stderr)
                return EXIT_FAILURE
            except (OSError, ValueError) as e:
                _LOGGER.error("Command %s failed: %s", func.__name__, e)
                print(error_line(CTLError(str(e), code=type(e).__name__.lower())),
                      file=sys.stderr)
                return EXIT_FAILURE
        return wrapper
