"""Masked-prediction objective: cross-entropy on masked frames only."""

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import EmptyMaskError


def masked_prediction_loss(logits, targets, mask) -> torch.Tensor:
    """Mean cross-entropy over the masked frames of one segment.

    `logits` is T x k (tensor or array), `targets` a length-T label
    sequence, `mask` a MaskSpec or an index array. Unmasked frames never
    contribute; an empty mask raises EmptyMaskError so the caller can
    resample.
    """
    if not torch.is_tensor(logits):
        logits = torch.as_tensor(np.asarray(logits))
    indices = mask.masked_indices if hasattr(mask, "masked_indices") else np.asarray(mask)
    if len(indices) == 0:
        raise EmptyMaskError("no masked frames; resample the mask")
    labels = targets.labels if hasattr(targets, "labels") else np.asarray(targets)
    idx = torch.as_tensor(indices, dtype=torch.long)
    tgt = torch.as_tensor(np.asarray(labels), dtype=torch.long)[idx]
    return F.cross_entropy(logits[idx], tgt)
