"""CTC speech-recognition head and greedy decoding."""

import numpy as np
import torch
from torch import nn


class AsrHead(nn.Module):
    """Three 1024-unit feed-forward layers with LeakyReLU, then per-frame
    logits over the vocabulary (blank fixed at index 0)."""

    NUM_LAYERS = 3

    def __init__(self, model_dim: int, vocab_size: int, ffn_dim: int = 1024):
        super().__init__()
        layers = []
        in_dim = model_dim
        for _ in range(self.NUM_LAYERS):
            layers += [nn.Linear(in_dim, ffn_dim), nn.LeakyReLU()]
            in_dim = ffn_dim
        self.ffn = nn.Sequential(*layers)
        self.out = nn.Linear(in_dim, vocab_size)

    def forward(self, reps: torch.Tensor) -> torch.Tensor:
        return self.out(self.ffn(reps))


def collapse_repeats(ids) -> list:
    """Merge consecutive duplicates (idempotent)."""
    out = []
    prev = None
    for i in ids:
        i = int(i)
        if i != prev:
            out.append(i)
        prev = i
    return out


def collapse_ctc(ids, blank_id: int = 0) -> list:
    """Collapse consecutive repeats, then drop blanks."""
    return [i for i in collapse_repeats(ids) if i != blank_id]


def decode_ctc_greedy(frame_logits, vocab) -> str:
    """Greedy CTC decode: per-frame argmax, collapse repeats, drop blanks,
    map ids to symbols. No language model at any point."""
    if torch.is_tensor(frame_logits):
        frame_logits = frame_logits.detach().cpu().numpy()
    ids = np.argmax(np.asarray(frame_logits), axis=-1)
    return vocab.decode_ids(collapse_ctc(ids, vocab.blank_id))
