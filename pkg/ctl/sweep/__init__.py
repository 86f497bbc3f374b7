"""Ablation harnesses."""
from .harness import SweepResult, label_fraction_study, lbp_sweep

__all__ = ["SweepResult", "label_fraction_study", "lbp_sweep"]
