"""Span masking over frame sequences.

Every frame independently starts a span with probability mask_start_prob;
spans are span_length frames, may overlap, and truncate at the sequence
end. Expected coverage is 1 - (1 - p)**span.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..seeding import rng_for

DEFAULT_MASK_START_PROB = 0.08
DEFAULT_SPAN_LENGTH = 10


@dataclass
class MaskSpec:
    num_frames: int
    mask_start_prob: float
    span_length: int
    masked_indices: np.ndarray  # sorted unique frame indices
    seed: int

    def __len__(self):
        return len(self.masked_indices)

    def bool_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_frames, dtype=bool)
        mask[self.masked_indices] = True
        return mask


def sample_mask(
    num_frames: int,
    mask_start_prob: float = DEFAULT_MASK_START_PROB,
    span_length: int = DEFAULT_SPAN_LENGTH,
    seed: int = 0,
) -> MaskSpec:
    if num_frames < 1:
        raise ConfigError(f"cannot mask a {num_frames}-frame sequence")
    rng = rng_for(seed, "mask")
    starts = np.flatnonzero(rng.random(num_frames) < mask_start_prob)
    mask = np.zeros(num_frames, dtype=bool)
    for s in starts:
        mask[s : s + span_length] = True
    return MaskSpec(
        num_frames=num_frames,
        mask_start_prob=mask_start_prob,
        span_length=span_length,
        masked_indices=np.flatnonzero(mask),
        seed=seed,
    )
