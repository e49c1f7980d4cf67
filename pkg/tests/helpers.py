"""Shared test utilities: micro models, finite-difference gradient checks,
and a tiny on-disk pretraining world."""

import numpy as np
import torch

from maftlab.corpus.audio import write_wav
from maftlab.corpus.manifest import ManifestEntry
from maftlab.pretrain.model import EncoderConfig, MaskedPredictionModel

RATE = 16000

# Micro encoder: small enough that every parameter is finite-difference
# checkable, still downsampling by the full 320x.
MICRO_CONFIG = EncoderConfig(
    conv_layers=((4, 16, 16), (8, 24, 20)),
    num_blocks=1,
    model_dim=8,
    num_heads=2,
    ffn_dim=16,
    dropout=0.0,
)


def micro_model(num_units=5, seed=0) -> MaskedPredictionModel:
    torch.manual_seed(seed)
    return MaskedPredictionModel(MICRO_CONFIG, num_units).double()


def finite_diff_errors(loss_fn, params, h_scale=1e-5) -> np.ndarray:
    """Relative error between analytic gradients and central differences,
    one entry per scalar parameter. Everything must be float64."""
    for p in params:
        if p.grad is not None:
            p.grad = None
    loss = loss_fn()
    loss.backward()
    errors = []
    with torch.no_grad():
        for p in params:
            grad = p.grad.reshape(-1)
            flat = p.reshape(-1)
            for idx in range(flat.numel()):
                orig = flat[idx].item()
                h = h_scale * max(1.0, abs(orig))
                flat[idx] = orig + h
                lp = loss_fn().item()
                flat[idx] = orig - h
                lm = loss_fn().item()
                flat[idx] = orig
                fd = (lp - lm) / (2 * h)
                ga = grad[idx].item()
                denom = max(abs(ga), abs(fd), 1e-8)
                errors.append(abs(ga - fd) / denom)
    return np.asarray(errors)


def tone_wave(freq, seconds, amp=0.3, phase=0.0):
    t = np.arange(int(seconds * RATE)) / RATE
    return amp * np.sin(2 * np.pi * freq * t + phase)


def make_mini_store(root, num_units=8, freqs=(400.0, 900.0, 1600.0)):
    """Three single-tone segments with frame-aligned constant targets.

    Returns (entries, targets) with audio under root; targets label each
    frame with the segment's tone index (a learnable mapping).
    """
    entries, targets = [], {}
    for i, freq in enumerate(freqs):
        seconds = 1.0 + 0.2 * i
        wave = tone_wave(freq, seconds)
        seg_id = f"seg{i}"
        write_wav(root / f"{seg_id}.wav", wave)
        entries.append(
            ManifestEntry(id=seg_id, path=f"{seg_id}.wav", lang="aaa",
                          duration_sec=len(wave) / RATE, source="toy", split="train")
        )
        t = len(wave) // 320
        targets[seg_id] = np.full(t, i % num_units, dtype=np.int32)
    return entries, targets
