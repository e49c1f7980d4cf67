"""Desk-scale study harness: synthetic corpora, pipelines, and recipes."""

from .synth import ToyLanguage, make_dialect_corpus, make_noisy_copy, make_toy_corpus
from .recipes import (
    ExperimentRecipe,
    run_cross_corpus,
    run_low_resource,
    run_multidialect,
    run_recipe,
    run_variant_comparison,
)

__all__ = [
    "ToyLanguage",
    "make_toy_corpus",
    "make_dialect_corpus",
    "make_noisy_copy",
    "ExperimentRecipe",
    "run_recipe",
    "run_variant_comparison",
    "run_cross_corpus",
    "run_low_resource",
    "run_multidialect",
]
