"""Contrastive self-supervised texture learning for grayscale patch classification."""
import json
from pathlib import Path

MANIFEST = json.loads((Path(__file__).parent / "manifest.json").read_text(encoding="utf-8"))

__version__ = MANIFEST["version"]
CHECKPOINT_FORMAT = MANIFEST["checkpoint_format"]

__all__ = ["CHECKPOINT_FORMAT", "MANIFEST", "__version__"]
