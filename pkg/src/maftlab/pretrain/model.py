"""Toy waveform encoder for masked-unit prediction.

A small stack of strided convolutions downsamples 16 kHz waveforms by 320x
to 50 frames/s, followed by pre-norm self-attention blocks and a linear
projection onto the discrete-unit inventory. Deliberately small: every
gradient is checkable by finite differences and CPU runs stay in minutes.
"""

import hashlib
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError, EmptyFeatureError, NumericalError

DOWNSAMPLE = 320

# (out_channels, kernel, stride) per conv layer; strides multiply to 320.
DEFAULT_CONV_LAYERS = ((128, 20, 16), (128, 24, 20))


@dataclass
class EncoderConfig:
    conv_layers: tuple = DEFAULT_CONV_LAYERS
    num_blocks: int = 4
    model_dim: int = 128
    num_heads: int = 4
    ffn_dim: int = 256
    dropout: float = 0.0

    def validate(self):
        if self.model_dim % self.num_heads:
            raise ConfigError("model_dim must be divisible by num_heads")
        factor = 1
        for _, kernel, stride in self.conv_layers:
            if (kernel - stride) % 2:
                raise ConfigError("conv kernel minus stride must be even (symmetric padding)")
            if kernel < stride:
                raise ConfigError("conv kernel must be at least the stride")
            factor *= stride
        if factor != DOWNSAMPLE:
            raise ConfigError(f"conv strides must multiply to {DOWNSAMPLE}, got {factor}")
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "EncoderConfig":
        raw = dict(raw)
        raw["conv_layers"] = tuple(tuple(layer) for layer in raw["conv_layers"])
        return cls(**raw).validate()


def _sinusoid_table(t: int, dim: int, dtype, device) -> torch.Tensor:
    position = torch.arange(t, dtype=torch.float64, device=device)[:, None]
    div = torch.exp(
        torch.arange(0, dim, 2, dtype=torch.float64, device=device)
        * (-math.log(10000.0) / dim)
    )
    table = torch.zeros(t, dim, dtype=torch.float64, device=device)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table.to(dtype)


class _Block(nn.Module):
    """Pre-norm self-attention + feed-forward."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.model_dim)
        # bias=False: the fused key-projection bias cancels inside softmax
        # (structurally zero gradient); shifts come from the LayerNorms.
        self.attn = nn.MultiheadAttention(
            cfg.model_dim, cfg.num_heads, dropout=cfg.dropout, batch_first=True,
            bias=False,
        )
        self.norm2 = nn.LayerNorm(cfg.model_dim)
        self.ffn = nn.Sequential(
            nn.Linear(cfg.model_dim, cfg.ffn_dim),
            nn.GELU(),
            nn.Linear(cfg.ffn_dim, cfg.model_dim),
        )
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, key_padding_mask=None):
        h = self.norm1(x)
        attn_out, _ = self.attn(
            h, h, h, key_padding_mask=key_padding_mask, need_weights=False
        )
        x = x + self.drop(attn_out)
        x = x + self.drop(self.ffn(self.norm2(x)))
        return x


class MaskedPredictionModel(nn.Module):
    def __init__(self, cfg: EncoderConfig, num_units: int):
        super().__init__()
        self.cfg = cfg.validate()
        self.num_units = num_units
        convs = []
        in_ch = 1
        for out_ch, kernel, stride in cfg.conv_layers:
            convs.append(nn.Conv1d(in_ch, out_ch, kernel, stride=stride,
                                   padding=(kernel - stride) // 2))
            convs.append(nn.GELU())
            in_ch = out_ch
        self.convs = nn.Sequential(*convs)
        self.input_proj = (
            nn.Identity() if in_ch == cfg.model_dim else nn.Linear(in_ch, cfg.model_dim)
        )
        self.mask_embedding = nn.Parameter(torch.zeros(cfg.model_dim))
        nn.init.normal_(self.mask_embedding, std=0.1)
        self.blocks = nn.ModuleList(_Block(cfg) for _ in range(cfg.num_blocks))
        self.final_norm = nn.LayerNorm(cfg.model_dim)
        self.proj = nn.Linear(cfg.model_dim, num_units)

    @staticmethod
    def frame_count(n_samples: int) -> int:
        return n_samples // DOWNSAMPLE

    def _frontend(self, wave: torch.Tensor, lengths=None) -> torch.Tensor:
        """(B, n) -> (B, T, C); symmetric zero padding keeps T = n // 320.

        With per-item lengths, conv outputs beyond each item's valid extent
        are zeroed between layers, so a padded batch reproduces exactly what
        each item would produce alone (batch composition never leaks into
        valid frames)."""
        x = wave.unsqueeze(1)
        valid = None
        if lengths is not None:
            valid = torch.as_tensor([int(v) for v in lengths], device=wave.device)
        for layer in self.convs:
            x = layer(x)
            if isinstance(layer, nn.Conv1d) and valid is not None:
                valid = torch.div(valid, layer.stride[0], rounding_mode="floor")
                keep = (
                    torch.arange(x.shape[-1], device=x.device)[None, :]
                    < valid[:, None]
                )
                x = x * keep.unsqueeze(1)
        return self.input_proj(x.transpose(1, 2))

    def encode(self, wave, lengths=None, mask=None, num_layers=None, with_frontend_mask=True):
        """Frame representations after `num_layers` blocks (default: all).

        `lengths` holds per-item sample counts for padded batches; `mask`
        is a (B, T) bool tensor of frames to replace with the learned mask
        embedding before the attention stack.
        """
        if wave.dim() == 1:
            wave = wave.unsqueeze(0)
        b, n = wave.shape
        t = self.frame_count(n)
        if t < 1:
            raise EmptyFeatureError(f"waveform too short for one frame ({n} samples)")
        x = self._frontend(wave, lengths=lengths)

        key_padding_mask = None
        if lengths is not None:
            frame_lengths = torch.as_tensor(
                [self.frame_count(int(ln)) for ln in lengths], device=x.device
            )
            key_padding_mask = (
                torch.arange(t, device=x.device)[None, :] >= frame_lengths[:, None]
            )

        if mask is not None and with_frontend_mask:
            x = torch.where(mask.unsqueeze(-1), self.mask_embedding.to(x.dtype), x)

        x = x + _sinusoid_table(t, self.cfg.model_dim, x.dtype, x.device)
        depth = self.cfg.num_blocks if num_layers is None else num_layers
        if not 0 <= depth <= self.cfg.num_blocks:
            raise ConfigError(f"layer {depth} outside 0..{self.cfg.num_blocks}")
        for block in self.blocks[:depth]:
            x = block(x, key_padding_mask=key_padding_mask)
        if depth == self.cfg.num_blocks:
            x = self.final_norm(x)
        return x

    def forward(self, wave, lengths=None, mask=None) -> torch.Tensor:
        """Frame logits (B, T, num_units) for masked-unit prediction."""
        logits = self.proj(self.encode(wave, lengths=lengths, mask=mask))
        if not torch.isfinite(logits).all():
            raise NumericalError("non-finite activations in forward pass")
        return logits

    def default_unit_layer(self) -> int:
        """Block whose hidden states feed codebook training: the 9th when
        the stack is deep enough, else the middle one."""
        if self.cfg.num_blocks >= 9:
            return 9
        return max(1, self.cfg.num_blocks // 2)

    @torch.no_grad()
    def hidden_states(self, samples: np.ndarray, layer: int = None):
        """Features for one segment: (T x model_dim float32, layer_used)."""
        layer = self.default_unit_layer() if layer is None else layer
        if not 1 <= layer <= self.cfg.num_blocks:
            raise ConfigError(
                f"teacher layer {layer} outside 1..{self.cfg.num_blocks}"
            )
        self.eval()
        wave = torch.as_tensor(np.asarray(samples, dtype=np.float32))
        reps = self.encode(wave, num_layers=layer)
        return reps.squeeze(0).numpy().astype(np.float32), layer


@dataclass
class Checkpoint:
    """A serializable encoder snapshot plus its training provenance."""

    config: EncoderConfig
    num_units: int
    state: dict
    step: int = 0
    validation_loss: float = math.inf
    meta: dict = field(default_factory=dict)
    _model: MaskedPredictionModel = field(default=None, repr=False, compare=False)

    def build_model(self) -> MaskedPredictionModel:
        model = MaskedPredictionModel(self.config, self.num_units)
        model.load_state_dict(self.state)
        return model

    def model(self) -> MaskedPredictionModel:
        if self._model is None:
            self._model = self.build_model()
        return self._model

    def hidden_states(self, samples, layer: int = None):
        return self.model().hidden_states(samples, layer=layer)

    def save(self, path):
        """Atomic write: serialize to a temp file, then rename."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format": 1,
            "config": asdict(self.config),
            "num_units": self.num_units,
            "state": self.state,
            "step": self.step,
            "validation_loss": self.validation_loss,
            "meta": self.meta,
        }
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        os.close(fd)
        torch.save(payload, tmp)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        payload = torch.load(Path(path), map_location="cpu", weights_only=False)
        if payload.get("format") != 1:
            raise ConfigError(f"{path}: unsupported checkpoint format")
        return cls(
            config=EncoderConfig.from_dict(payload["config"]),
            num_units=payload["num_units"],
            state=payload["state"],
            step=payload["step"],
            validation_loss=payload["validation_loss"],
            meta=payload.get("meta", {}),
        )


def file_digest(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
