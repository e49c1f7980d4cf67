"""Masked-prediction training loop for the three construction modes.

Modes: `maft_original` and `maft_new` continue training an existing
checkpoint (differing only in which codebook produced their targets);
`scratch` trains a fresh encoder on the new targets at a higher peak
learning rate. Schedule is linear warmup to peak_lr then linear decay to
zero; the returned checkpoint is the one with the lowest validation loss.
"""

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .. import kv
from ..corpus.audio import load_record
from ..corpus.manifest import base_id
from ..errors import ConfigError, EmptyMaskError, NumericalError
from ..seeding import derive_seed, rng_for
from .masking import DEFAULT_MASK_START_PROB, DEFAULT_SPAN_LENGTH, sample_mask
from .model import Checkpoint, EncoderConfig, MaskedPredictionModel, file_digest

MODES = ("maft_original", "maft_new", "scratch")

# Full-scale peak learning rates; MAFT continues a converged model gently,
# scratch needs a hot start.
MAFT_PEAK_LR = 5e-5
SCRATCH_PEAK_LR = 5e-3


@dataclass
class TrainRunConfig:
    mode: str
    codebook_ref: str
    init_checkpoint: str = None
    total_steps: int = 1000
    warmup_steps: int = 100
    peak_lr: float = None
    max_batch_tokens: int = 64000
    update_frequency: int = 1
    seed: int = 0
    validate_every: int = 100
    mask_start_prob: float = DEFAULT_MASK_START_PROB
    mask_span: int = DEFAULT_SPAN_LENGTH
    grad_clip: float = 5.0

    def __post_init__(self):
        if self.peak_lr is None:
            self.peak_lr = SCRATCH_PEAK_LR if self.mode == "scratch" else MAFT_PEAK_LR

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode != "scratch" and not self.init_checkpoint:
            raise ConfigError(f"mode {self.mode} requires init_checkpoint")
        if self.mode == "scratch" and self.init_checkpoint:
            raise ConfigError("scratch mode starts from random init, not a checkpoint")
        if self.warmup_steps > self.total_steps:
            raise ConfigError("warmup_steps must not exceed total_steps")
        if not self.codebook_ref:
            raise ConfigError("codebook_ref is required")
        return self

    @classmethod
    def from_file(cls, path) -> "TrainRunConfig":
        raw = kv.load_kv(path)
        return cls(
            mode=kv.get_str(raw, "mode"),
            codebook_ref=kv.get_str(raw, "codebook_ref"),
            init_checkpoint=raw.get("init_checkpoint") or None,
            total_steps=kv.get_int(raw, "total_steps", 1000),
            warmup_steps=kv.get_int(raw, "warmup_steps", 100),
            peak_lr=kv.get_float(raw, "peak_lr", 0.0) or None,
            max_batch_tokens=kv.get_int(raw, "max_batch_tokens", 64000),
            update_frequency=kv.get_int(raw, "update_frequency", 1),
            seed=kv.get_int(raw, "seed", 0),
            validate_every=kv.get_int(raw, "validate_every", 100),
            mask_start_prob=kv.get_float(raw, "mask_start_prob", DEFAULT_MASK_START_PROB),
            mask_span=kv.get_int(raw, "mask_span", DEFAULT_SPAN_LENGTH),
            grad_clip=kv.get_float(raw, "grad_clip", 5.0),
        ).validate()

    def to_file(self, path):
        raw = asdict(self)
        raw["init_checkpoint"] = raw["init_checkpoint"] or ""
        Path(path).write_text(kv.dump_kv(raw), encoding="utf-8")


def lr_at(step: int, total_steps: int, warmup_steps: int, peak_lr: float) -> float:
    """Linear warmup to peak_lr at step == warmup_steps, then linear decay
    to zero at step == total_steps."""
    if step <= warmup_steps:
        return peak_lr * step / max(warmup_steps, 1)
    if total_steps == warmup_steps:
        return peak_lr
    return peak_lr * (total_steps - step) / (total_steps - warmup_steps)


def select_checkpoint(history) -> int:
    """Step with the lowest validation loss; ties go to the earliest step."""
    if not history:
        raise ConfigError("empty validation history")
    best_step, _ = min(history, key=lambda item: (item[1], item[0]))
    return best_step


class AudioStore:
    """In-memory waveform cache keyed by segment id (desk corpora are small)."""

    def __init__(self, root):
        self.root = Path(root)
        self._cache: dict = {}

    def waveform(self, entry) -> np.ndarray:
        key = base_id(entry.id)
        if key not in self._cache:
            rec = load_record(self.root, entry)
            self._cache[key] = rec.samples.astype(np.float32)
        return self._cache[key]


def pack_batches(entries, store: AudioStore, max_batch_tokens: int):
    """Greedy sequential packing: consecutive manifest entries until the
    sample budget would be exceeded (oversized entries ride alone)."""
    batch, tokens = [], 0
    for entry in entries:
        n = len(store.waveform(entry))
        if batch and tokens + n > max_batch_tokens:
            yield batch
            batch, tokens = [], 0
        batch.append(entry)
        tokens += n
    if batch:
        yield batch


def _collate(batch, store: AudioStore):
    waves = [store.waveform(e) for e in batch]
    lengths = [len(w) for w in waves]
    padded = np.zeros((len(waves), max(lengths)), dtype=np.float32)
    for i, w in enumerate(waves):
        padded[i, : len(w)] = w
    return torch.from_numpy(padded), lengths


def _segment_mask(entry, n_samples: int, cfg: TrainRunConfig, *names) -> np.ndarray:
    """Non-empty frame mask for one segment; resamples on the rare empty draw."""
    t = MaskedPredictionModel.frame_count(n_samples)
    for attempt in range(100):
        spec = sample_mask(
            t,
            mask_start_prob=cfg.mask_start_prob,
            span_length=cfg.mask_span,
            seed=derive_seed(cfg.seed, *names, entry.id, attempt),
        )
        if len(spec):
            return spec.masked_indices
    raise EmptyMaskError(f"could not draw a non-empty mask for {entry.id}")


def _batch_loss(model, batch, store, targets, cfg: TrainRunConfig, mask_names):
    waves, lengths = _collate(batch, store)
    t_max = model.frame_count(waves.shape[1])
    mask = torch.zeros(len(batch), t_max, dtype=torch.bool)
    flat_targets, flat_rows, flat_cols = [], [], []
    for i, entry in enumerate(batch):
        idx = _segment_mask(entry, lengths[i], cfg, *mask_names)
        mask[i, idx] = True
        labels = targets[base_id(entry.id)]
        flat_targets.append(labels[idx])
        flat_rows.extend([i] * len(idx))
        flat_cols.extend(idx.tolist())
    logits = model(waves, lengths=lengths, mask=mask)
    picked = logits[flat_rows, flat_cols]
    tgt = torch.from_numpy(np.concatenate(flat_targets)).long()
    return F.cross_entropy(picked, tgt), len(flat_rows)


def _validate(model, valid_entries, store, targets, cfg: TrainRunConfig) -> float:
    """Pooled masked cross-entropy over the validation set with masks that
    are fixed per segment, so successive validations are comparable."""
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for batch in pack_batches(valid_entries, store, cfg.max_batch_tokens):
            loss, n = _batch_loss(model, batch, store, targets, cfg, ("validmask",))
            total += loss.item() * n
            count += n
    model.train()
    if count == 0:
        raise ConfigError("validation set produced no masked frames")
    return total / count


def _check_targets(entries, targets, store):
    for entry in entries:
        key = base_id(entry.id)
        if key not in targets:
            raise ConfigError(f"no targets for segment {key}")
        t = MaskedPredictionModel.frame_count(len(store.waveform(entry)))
        if len(targets[key]) != t:
            raise ConfigError(
                f"targets for {key} have {len(targets[key])} frames, expected {t}"
            )


def train_ssl(
    cfg: TrainRunConfig,
    train_entries,
    valid_entries,
    targets: dict,
    store_root,
    out_dir=None,
    encoder_cfg: EncoderConfig = None,
    num_units: int = None,
):
    """Run one pretraining job; returns (best Checkpoint, history, curve).

    `history` is the [(step, validation_loss)] series and `curve` the
    per-logged-step rows (step, train_loss, valid_loss or None, lr).
    Training aborts with NumericalError and a diagnostic dump if the loss
    goes non-finite.
    """
    cfg.validate()
    from ..units.kmeans import read_codebook

    codebook = read_codebook(cfg.codebook_ref)
    num_units = codebook.k if num_units is None else num_units

    torch.manual_seed(derive_seed(cfg.seed, "torch-init"))
    init_meta = {}
    if cfg.mode == "scratch":
        model = MaskedPredictionModel(encoder_cfg or EncoderConfig(), num_units)
    else:
        init = Checkpoint.load(cfg.init_checkpoint)
        if init.num_units != num_units:
            raise ConfigError(
                f"init checkpoint predicts {init.num_units} units but codebook has {num_units}"
            )
        model = init.build_model()
        init_meta = {
            "init_checkpoint": str(cfg.init_checkpoint),
            "init_digest": file_digest(cfg.init_checkpoint),
        }

    store = AudioStore(store_root)
    _check_targets(train_entries, targets, store)
    _check_targets(valid_entries, targets, store)

    meta = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "peak_lr": cfg.peak_lr,
        "total_steps": cfg.total_steps,
        "codebook_ref": str(cfg.codebook_ref),
        "codebook_digest": file_digest(cfg.codebook_ref),
        "codebook_provenance": codebook.provenance,
        **init_meta,
    }

    history = []
    curve = []
    best_state = copy.deepcopy(model.state_dict())
    best = (math.inf, 0)

    def run_validation(step):
        nonlocal best, best_state
        vloss = _validate(model, valid_entries, store, targets, cfg)
        history.append((step, vloss))
        if vloss < best[0]:
            best = (vloss, step)
            best_state = copy.deepcopy(model.state_dict())
        return vloss

    if cfg.total_steps == 0:
        run_validation(0)
        ckpt = Checkpoint(
            config=model.cfg, num_units=num_units, state=best_state,
            step=0, validation_loss=best[0], meta=meta,
        )
        if out_dir is not None:
            _write_run_outputs(out_dir, cfg, ckpt, history, curve, meta)
        return ckpt, history, curve

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.peak_lr,
                                 betas=(0.9, 0.98), eps=1e-6)
    order = rng_for(cfg.seed, "batch-order").permutation(len(train_entries))
    epoch_entries = [train_entries[i] for i in order]

    def micro_batches():
        while True:
            yield from pack_batches(epoch_entries, store, cfg.max_batch_tokens)

    batches = micro_batches()
    model.train()
    for step in range(1, cfg.total_steps + 1):
        lr = lr_at(step, cfg.total_steps, cfg.warmup_steps, cfg.peak_lr)
        for group in optimizer.param_groups:
            group["lr"] = lr
        optimizer.zero_grad()
        step_loss, step_frames = 0.0, 0
        for micro in range(cfg.update_frequency):
            batch = next(batches)
            loss, n = _batch_loss(model, batch, store, targets, cfg,
                                  ("trainmask", step, micro))
            (loss / cfg.update_frequency).backward()
            step_loss += loss.item() * n
            step_frames += n
        train_loss = step_loss / max(step_frames, 1)
        if not math.isfinite(train_loss):
            _dump_divergence(out_dir, cfg, step, lr, curve)
            raise NumericalError(f"training loss diverged at step {step}")
        if cfg.grad_clip:
            torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
        optimizer.step()

        vloss = None
        if step % cfg.validate_every == 0 or step == cfg.total_steps:
            vloss = run_validation(step)
        curve.append((step, train_loss, vloss, lr))

    ckpt = Checkpoint(
        config=model.cfg,
        num_units=num_units,
        state=best_state,
        step=select_checkpoint(history),
        validation_loss=best[0],
        meta=meta,
    )
    if out_dir is not None:
        _write_run_outputs(out_dir, cfg, ckpt, history, curve, meta)
    return ckpt, history, curve


def write_curve(curve, path):
    lines = ["step,train_loss,valid_loss,lr"]
    for step, train_loss, valid_loss, lr in curve:
        v = "" if valid_loss is None else f"{valid_loss:.8f}"
        lines.append(f"{step},{train_loss:.8f},{v},{lr:.10g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_history_csv(path) -> list:
    """(step, valid_loss) pairs from a loss-curve CSV."""
    history = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        cols = line.split(",")
        if len(cols) >= 3 and cols[2]:
            history.append((int(cols[0]), float(cols[2])))
    return history


def _write_run_outputs(out_dir, cfg, ckpt, history, curve, meta):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt.save(out_dir / "checkpoint.pt")
    write_curve(curve, out_dir / "loss_curve.csv")
    cfg.to_file(out_dir / "effective_config.txt")
    (out_dir / "run_meta.json").write_text(
        json.dumps({**meta, "best_step": ckpt.step,
                    "best_validation_loss": ckpt.validation_loss},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def _dump_divergence(out_dir, cfg, step, lr, curve):
    if out_dir is None:
        return
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = {
        "step": step,
        "lr": lr,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "recent_losses": [row[1] for row in curve[-20:]],
    }
    (out_dir / "divergence_dump.json").write_text(
        json.dumps(state, indent=2) + "\n", encoding="utf-8"
    )
