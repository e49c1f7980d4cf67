"""Attentive pooling and the language-identification head."""

import torch
from torch import nn


def attentive_pool(frame_reps: torch.Tensor, scores: torch.Tensor) -> torch.Tensor:
    """Softmax-weighted sum of frame representations.

    frame_reps is T x D, scores a length-T vector of per-frame scalars.
    The output lies in the convex hull of the frames; uniform scores
    reduce to the frame mean.
    """
    weights = torch.softmax(scores.reshape(-1), dim=0)
    return weights @ frame_reps


class SlidHead(nn.Module):
    """Frame scorer -> attentive pooling -> hidden layer -> class logits."""

    def __init__(self, model_dim: int, num_languages: int, hidden_dim: int = 512):
        super().__init__()
        # no scorer bias: a constant score shift cancels inside the softmax
        self.scorer = nn.Linear(model_dim, 1, bias=False)
        self.hidden = nn.Linear(model_dim, hidden_dim)
        self.act = nn.LeakyReLU()
        self.classifier = nn.Linear(hidden_dim, num_languages)

    def forward(self, reps: torch.Tensor, frame_mask: torch.Tensor = None) -> torch.Tensor:
        """reps: (B, T, D); frame_mask: (B, T) bool, True on valid frames."""
        scores = self.scorer(reps).squeeze(-1)
        if frame_mask is not None:
            scores = scores.masked_fill(~frame_mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        pooled = torch.einsum("bt,btd->bd", weights, reps)
        return self.classifier(self.act(self.hidden(pooled)))
