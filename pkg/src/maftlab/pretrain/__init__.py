"""Masked-prediction pretraining: toy encoder, span masking, training loop."""

from .masking import MaskSpec, sample_mask
from .loss import masked_prediction_loss
from .model import Checkpoint, EncoderConfig, MaskedPredictionModel
from .train import TrainRunConfig, lr_at, select_checkpoint, train_ssl

__all__ = [
    "MaskSpec",
    "sample_mask",
    "masked_prediction_loss",
    "Checkpoint",
    "EncoderConfig",
    "MaskedPredictionModel",
    "TrainRunConfig",
    "lr_at",
    "select_checkpoint",
    "train_ssl",
]
