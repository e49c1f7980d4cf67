"""Discrete-unit targets: frame features, codebook training, assignment."""

from .features import FPS, FrameFeatures, extract_features, num_frames
from .kmeans import (
    Codebook,
    assign_targets,
    read_codebook,
    sample_kmeans_corpus,
    train_kmeans,
    write_codebook,
)
from .targets import TargetSequence, read_targets, write_targets

__all__ = [
    "FPS",
    "FrameFeatures",
    "extract_features",
    "num_frames",
    "Codebook",
    "train_kmeans",
    "assign_targets",
    "sample_kmeans_corpus",
    "read_codebook",
    "write_codebook",
    "TargetSequence",
    "read_targets",
    "write_targets",
]
