"""End-to-end plumbing shared by the experiment recipes.

Stages: segment the raw long-form recordings, apply the duration and
scarcity filters, carve validation, materialize the temperature-balanced
manifest, build discrete targets (spectral bootstrap first, then teacher
features), pretrain the three variants, and fine-tune each on both tasks.
Every stage writes its artifacts under the working directory so reruns
with the same seed are byte-identical.
"""

import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..corpus.audio import load_record
from ..corpus.manifest import (
    compute_durations,
    read_manifest,
    write_manifest,
)
from ..errors import ConfigError
from ..heads.finetune import FinetuneConfig, train_asr, train_slid
from ..heads.vocab import build_char_vocab
from ..pretrain.model import Checkpoint, EncoderConfig
from ..pretrain.train import TrainRunConfig, train_ssl
from ..sampler import build_upsampled_manifest, carve_validation, compute_sampling_probs, write_plan
from ..seeding import derive_seed
from ..segmenter import VadConfig, apply_duration_filter, cut_segments, drop_scarce_languages, vad_segment
from ..units.features import extract_features
from ..units.kmeans import (
    assign_targets,
    read_codebook,
    sample_kmeans_corpus,
    train_kmeans,
    write_codebook,
)
from ..units.targets import write_targets

MODES = ("maft_original", "maft_new", "scratch")


@dataclass
class WorldConfig:
    """Desk-scale pipeline knobs. Filter rules keep their full-scale
    defaults; quotas and the scarcity floor are scaled to minutes of audio."""

    seed: int = 0
    vad: VadConfig = field(default_factory=VadConfig)
    min_dur: float = 1.0
    max_dur: float = 30.0
    min_lang_total: float = 60.0
    carve_small_quota: float = 30.0
    carve_big_quota: float = 60.0
    carve_threshold: float = 7200.0
    alpha: float = 0.8
    excluded: tuple = ()
    upsample_factor: float = 1.3
    num_units: int = 32
    kmeans_cap: float = 3600.0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    teacher_steps: int = 1400
    teacher_peak_lr: float = 1.5e-3
    maft_steps: int = 150
    scratch_steps: int = 600
    warmup_fraction: float = 0.1
    max_batch_tokens: int = 128000
    validate_every: int = 50


@dataclass
class World:
    """Filesystem layout and manifests for one prepared corpus."""

    work: Path
    corpus_root: Path
    seg_store: Path
    pretrain_train: list
    pretrain_valid: list
    upsampled: list
    plan: object
    labeled: dict            # split -> [ManifestEntry]
    transcripts: dict
    cfg: WorldConfig


def prepare_world(corpus_root, work, cfg: WorldConfig) -> World:
    """Segment, filter, carve, and upsample one generated corpus."""
    corpus_root = Path(corpus_root)
    work = Path(work)
    seg_store = work / "store"
    seg_dir = seg_store / "segments"

    recordings = read_manifest(corpus_root / "recordings.tsv")
    entries = []
    for rec_entry in recordings:
        rec = load_record(corpus_root, rec_entry)
        segments = vad_segment(rec, cfg.vad)
        segments = apply_duration_filter(segments, cfg.min_dur, cfg.max_dur)
        entries.extend(cut_segments(rec, segments, seg_dir, relative_to=seg_store))
    entries = drop_scarce_languages(entries, cfg.min_lang_total)
    if not entries:
        raise ConfigError("segmentation left no usable audio")
    write_manifest(entries, work / "segments.tsv")

    train, valid = carve_validation(
        entries,
        seed=derive_seed(cfg.seed, "carve"),
        small_quota=cfg.carve_small_quota,
        big_quota=cfg.carve_big_quota,
        small_threshold=cfg.carve_threshold,
    )
    write_manifest(train, work / "pretrain_train.tsv")
    write_manifest(valid, work / "pretrain_valid.tsv")

    plan = compute_sampling_probs(compute_durations(train), cfg.alpha, cfg.excluded)
    included_total = sum(
        e.duration_sec for e in train if e.lang not in plan.excluded
    )
    upsampled, realized = build_upsampled_manifest(
        train, plan, target_total=cfg.upsample_factor * included_total,
        seed=derive_seed(cfg.seed, "upsample"),
    )
    write_plan(realized, work / "sampling_plan.tsv")
    write_manifest(upsampled, work / "pretrain_upsampled.tsv")

    labeled_entries = read_manifest(corpus_root / "labeled.tsv")
    labeled = {split: [e for e in labeled_entries if e.split == split]
               for split in ("train", "valid", "test")}
    from ..heads.data import read_transcripts

    return World(
        work=work,
        corpus_root=corpus_root,
        seg_store=seg_store,
        pretrain_train=train,
        pretrain_valid=valid,
        upsampled=upsampled,
        plan=realized,
        labeled=labeled,
        transcripts=read_transcripts(corpus_root / "transcripts.tsv"),
        cfg=cfg,
    )


def _features_for(world: World, entries, kind, teacher=None):
    for entry in entries:
        rec = load_record(world.seg_store, entry)
        yield extract_features(rec, kind=kind, teacher=teacher)


def build_unit_targets(world: World, kind: str, name: str, teacher: Checkpoint = None):
    """Codebook on the capped per-language sample, then targets for every
    pretraining segment. Returns (codebook_path, targets_path)."""
    cfg = world.cfg
    corpus = sample_kmeans_corpus(
        world.pretrain_train, cap=cfg.kmeans_cap, seed=derive_seed(cfg.seed, "kmcorpus", name)
    )
    stack = np.concatenate(
        [f.matrix for f in _features_for(world, corpus, kind, teacher)], axis=0
    )
    codebook = train_kmeans(
        stack, k=cfg.num_units, seed=derive_seed(cfg.seed, "kmeans", name),
        feature_kind=kind,
    )
    cb_path = world.work / "units" / f"codebook_{name}.bin"
    write_codebook(codebook, cb_path, provenance="new")
    codebook = read_codebook(cb_path)

    sequences = [
        assign_targets(f, codebook)
        for f in _features_for(
            world, world.pretrain_train + world.pretrain_valid, kind, teacher
        )
    ]
    targets_path = world.work / "units" / f"targets_{name}.tsv"
    write_targets(sequences, targets_path)
    return cb_path, targets_path


def adopt_codebook(src_path, dst_path):
    """Reference an existing codebook for a run that must not retrain it;
    the copy's provenance is marked `original`."""
    src_path, dst_path = Path(src_path), Path(dst_path)
    dst_path.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(src_path, dst_path)
    cb = read_codebook(src_path)
    write_codebook(cb, dst_path, provenance="original")
    return dst_path


def pretrain_mode(world: World, mode: str, codebook_path, targets_path,
                  init_checkpoint=None, steps: int = None, peak_lr: float = None,
                  run_name: str = None) -> Path:
    """One pretraining run; returns the checkpoint path."""
    cfg = world.cfg
    if steps is None:
        steps = {"maft_original": cfg.maft_steps, "maft_new": cfg.maft_steps,
                 "scratch": cfg.scratch_steps}[mode]
    run_dir = world.work / "runs" / (run_name or mode)
    from ..units.targets import read_targets

    run_cfg = TrainRunConfig(
        mode=mode,
        codebook_ref=str(codebook_path),
        init_checkpoint=str(init_checkpoint) if init_checkpoint else None,
        total_steps=steps,
        warmup_steps=max(1, int(cfg.warmup_fraction * steps)) if steps else 0,
        peak_lr=peak_lr,
        max_batch_tokens=cfg.max_batch_tokens,
        seed=derive_seed(cfg.seed, "pretrain", run_name or mode),
        validate_every=min(cfg.validate_every, steps) if steps else 1,
    )
    train_ssl(
        run_cfg,
        world.upsampled,
        world.pretrain_valid,
        read_targets(targets_path),
        store_root=world.seg_store,
        out_dir=run_dir,
        encoder_cfg=cfg.encoder,
    )
    return run_dir / "checkpoint.pt"


def build_teacher(world: World) -> dict:
    """Bootstrap teacher: scratch run on spectral-feature targets. Stands in
    for a full-scale pretrained model, which a desk cannot require; its
    peak rate is softer than the scratch-mode default because the three
    construction modes keep their pinned rates while the bootstrap just
    needs a stable, content-rich encoder."""
    cb_path, targets_path = build_unit_targets(world, kind="log_mel", name="bootstrap")
    ckpt_path = pretrain_mode(
        world, "scratch", cb_path, targets_path,
        steps=world.cfg.teacher_steps, peak_lr=world.cfg.teacher_peak_lr,
        run_name="teacher",
    )
    return {"checkpoint": ckpt_path, "codebook": cb_path, "targets": targets_path}


def build_variants(world: World, teacher: dict) -> dict:
    """The three construction modes.

    `maft_original` continues the teacher on the teacher's own codebook
    (loaded, never retrained); `maft_new` continues it on a codebook
    trained over teacher-layer features; `scratch` trains a fresh encoder
    on those new targets at the hot learning rate.
    """
    teacher_ckpt = Checkpoint.load(teacher["checkpoint"])
    new_cb, new_targets = build_unit_targets(
        world, kind="teacher_layer", name="teacher_units", teacher=teacher_ckpt
    )
    original_cb = adopt_codebook(
        teacher["codebook"], world.work / "units" / "codebook_original.bin"
    )
    out = {}
    out["maft_original"] = pretrain_mode(
        world, "maft_original", original_cb, teacher["targets"],
        init_checkpoint=teacher["checkpoint"],
    )
    out["maft_new"] = pretrain_mode(
        world, "maft_new", new_cb, new_targets,
        init_checkpoint=teacher["checkpoint"],
    )
    out["scratch"] = pretrain_mode(world, "scratch", new_cb, new_targets)
    return out


@dataclass
class FinetuneSpec:
    slid: FinetuneConfig
    asr: FinetuneConfig
    vocab_size: int = 64
    african_subset: tuple = ()


def finetune_checkpoint(world: World, ckpt_path, spec: FinetuneSpec, out_dir,
                        label_set=None, splits=None) -> dict:
    """SLID + ASR fine-tuning of one pretrained encoder; returns both
    TaskResults."""
    ckpt = Checkpoint.load(ckpt_path)
    labeled = splits or world.labeled
    label_set = label_set or sorted({e.lang for e in labeled["train"]})
    out_dir = Path(out_dir)

    slid = train_slid(
        ckpt, labeled["train"], labeled["valid"], labeled["test"],
        world.corpus_root, spec.slid, label_set,
        african_subset=spec.african_subset, out_dir=out_dir / "slid",
        base_seed=derive_seed(world.cfg.seed, "finetune-slid", str(ckpt_path)),
    )
    vocab = build_char_vocab(
        [world.transcripts[e.id] for e in labeled["train"]], size=spec.vocab_size
    )
    vocab.to_file(out_dir / "char_vocab.json")
    asr = train_asr(
        ckpt, labeled["train"], labeled["valid"], labeled["test"],
        world.transcripts, vocab, world.corpus_root, spec.asr,
        african_subset=spec.african_subset, out_dir=out_dir / "asr",
        base_seed=derive_seed(world.cfg.seed, "finetune-asr", str(ckpt_path)),
    )
    return {"slid": slid, "asr": asr, "vocab": vocab}
