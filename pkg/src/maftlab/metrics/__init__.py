"""Evaluation kernels and reporting conventions."""

from .edits import EditCounts, edit_distance
from .rates import cer, wer
from .classification import (
    ConfusionMatrix,
    MetricReport,
    confusion_analysis,
    confusion_matrix,
    macro_f1,
)

__all__ = [
    "EditCounts",
    "edit_distance",
    "wer",
    "cer",
    "macro_f1",
    "MetricReport",
    "ConfusionMatrix",
    "confusion_matrix",
    "confusion_analysis",
]
