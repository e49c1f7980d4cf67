"""Command-line entry point.

Subcommands mirror the pipeline stages: corpus {ingest,stats}, segment run,
sampler {plan,materialize}, units {features,kmeans,assign}, ssl
{train,select}, heads {slid,asr,decode}, metrics score, experiments run,
plots emit. Exit codes: 0 success, 1 runtime failure, 2 config/validation
error. Every stage logs the SHA-256 of its effective configuration.
"""

import hashlib
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import kv
from .corpus.audio import ingest_audio, load_record, write_wav
from .corpus.manifest import (
    compute_durations,
    duration_csv_lines,
    read_manifest,
    write_manifest,
)
from .errors import ConfigError, DataError, MaftlabError
from .heads.data import read_transcripts
from .heads.finetune import (
    FinetuneConfig,
    asr_language_report,
    evaluate_asr,
    load_finetuned,
    train_asr,
    train_slid,
)
from .heads.vocab import CharVocab, build_char_vocab
from .metrics.classification import confusion_analysis, confusion_matrix, macro_f1
from .pretrain.model import Checkpoint
from .pretrain.train import TrainRunConfig, read_history_csv, select_checkpoint, train_ssl
from .sampler import (
    build_upsampled_manifest,
    compute_sampling_probs,
    read_plan,
    write_plan,
)
from .segmenter import VadConfig, apply_duration_filter, cut_segments, drop_scarce_languages, vad_segment
from .units.features import extract_features
from .units.kmeans import assign_targets, read_codebook, train_kmeans, write_codebook
from .units.targets import TargetSequence, write_targets

log = logging.getLogger("maftlab")


def _log_config(stage: str, mapping: dict):
    text = kv.dump_kv({k: mapping[k] for k in sorted(mapping)})
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    log.info("%s config sha256=%s", stage, digest)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Global seed; stages derive named substreams from it.")
@click.option("--log-level", default="INFO", show_default=True)
@click.option("--threads", type=int, default=None, help="Torch thread count.")
@click.pass_context
def cli(ctx, seed, log_level, threads):
    """Desk-scale multilingual speech SSL laboratory."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    if seed < 0 or seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if threads:
        import torch

        torch.set_num_threads(threads)
    ctx.obj = {"seed": seed}


@cli.group()
def corpus():
    """Audio ingestion and duration statistics."""


@corpus.command("ingest")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--lang-map", "lang_map", required=True, type=click.Path(exists=True),
              help="TSV: filename<TAB>lang<TAB>source")
@click.option("--out", "out_store", required=True, type=click.Path())
def corpus_ingest(in_dir, lang_map, out_store):
    """Normalize raw audio into a 16 kHz mono store with a manifest."""
    _log_config("corpus.ingest", {"in": in_dir, "lang_map": lang_map, "out": out_store})
    in_dir, out_store = Path(in_dir), Path(out_store)
    entries = []
    for line in Path(lang_map).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ConfigError(f"lang map line needs 3 columns: {line!r}")
        filename, lang, source = cols
        rec = ingest_audio(in_dir / filename, lang, source)
        path = out_store / "audio" / f"{rec.id}.wav"
        write_wav(path, rec.samples, rec.sample_rate)
        from .corpus.manifest import ManifestEntry

        entries.append(
            ManifestEntry(
                id=rec.id, path=str(path.relative_to(out_store)), lang=lang,
                duration_sec=rec.duration, source=source, split="train",
            )
        )
    entries.sort(key=lambda e: e.id)
    write_manifest(entries, out_store / "manifest.tsv")
    click.echo(f"ingested {len(entries)} files into {out_store}")


@corpus.command("stats")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_csv", required=True, type=click.Path())
def corpus_stats(manifest_path, out_csv):
    """Per-language duration CSV, descending hours."""
    _log_config("corpus.stats", {"manifest": manifest_path, "out": out_csv})
    table = compute_durations(read_manifest(manifest_path))
    lines = duration_csv_lines(table)
    Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
    Path(out_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"{len(table.by_language)} languages, {table.total() / 3600.0:.4f} h total")


@cli.group()
def segment():
    """Voice-activity segmentation and filters."""


@segment.command("run")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--vad-config", "vad_config", type=click.Path(exists=True))
@click.option("--min-dur", type=float, default=1.0, show_default=True)
@click.option("--max-dur", type=float, default=30.0, show_default=True)
@click.option("--min-lang-total", type=float, default=1200.0, show_default=True,
              help="Drop languages under this many seconds (default: 20 min).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def segment_run(manifest_path, store_root, vad_config, min_dur, max_dur,
                min_lang_total, out_dir):
    """Segment recordings, then apply duration and scarcity filters."""
    _log_config("segment.run", {
        "manifest": manifest_path, "store": store_root, "vad_config": vad_config or "",
        "min_dur": min_dur, "max_dur": max_dur, "min_lang_total": min_lang_total,
    })
    cfg = VadConfig.from_file(vad_config) if vad_config else VadConfig()
    out_dir = Path(out_dir)
    entries = []
    for rec_entry in read_manifest(manifest_path):
        rec = load_record(store_root, rec_entry)
        segments = apply_duration_filter(vad_segment(rec, cfg), min_dur, max_dur)
        entries.extend(cut_segments(rec, segments, out_dir / "segments", relative_to=out_dir))
    entries = drop_scarce_languages(entries, min_lang_total)
    write_manifest(entries, out_dir / "manifest.tsv")
    click.echo(f"kept {len(entries)} segments")


@cli.group()
def sampler():
    """Validation carve-out and temperature-balanced materialization."""


@sampler.command("plan")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--alpha", type=float, default=0.8, show_default=True)
@click.option("--exclude", default="", help="Comma-separated language codes.")
@click.option("--out", "out_path", required=True, type=click.Path())
def sampler_plan(manifest_path, alpha, exclude, out_path):
    """Compute per-language sampling probabilities."""
    _log_config("sampler.plan", {"manifest": manifest_path, "alpha": alpha,
                                 "exclude": exclude})
    excluded = {s for s in exclude.split(",") if s}
    plan = compute_sampling_probs(
        compute_durations(read_manifest(manifest_path)), alpha=alpha, excluded=excluded
    )
    write_plan(plan, out_path)
    click.echo(f"plan over {len(plan.q)} languages written to {out_path}")


@sampler.command("materialize")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--target-hours", type=float, required=True)
@click.option("--seed", type=int, default=None, help="Defaults to the global seed.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def sampler_materialize(ctx, plan_path, manifest_path, target_hours, seed, out_path):
    """Materialize the balanced training manifest by repetition."""
    seed = ctx.obj["seed"] if seed is None else seed
    _log_config("sampler.materialize", {"plan": plan_path, "manifest": manifest_path,
                                        "target_hours": target_hours, "seed": seed})
    plan = read_plan(plan_path)
    entries = read_manifest(manifest_path)
    upsampled, realized = build_upsampled_manifest(
        entries, plan, target_total=target_hours * 3600.0, seed=seed
    )
    write_manifest(upsampled, out_path)
    write_plan(realized, Path(out_path).with_suffix(".plan.tsv"))
    click.echo(f"{len(upsampled)} entries materialized")


@cli.group()
def units():
    """Frame features, codebooks, and discrete targets."""


def _features_meta(out_dir) -> dict:
    meta_path = Path(out_dir) / "features_meta.json"
    if not meta_path.exists():
        raise ConfigError(f"{out_dir}: missing features_meta.json")
    return json.loads(meta_path.read_text(encoding="utf-8"))


@units.command("features")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["log_mel", "mfcc", "teacher_layer"]),
              default="log_mel", show_default=True)
@click.option("--teacher", "teacher_path", type=click.Path(exists=True))
@click.option("--layer", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def units_features(manifest_path, store_root, kind, teacher_path, layer, out_dir):
    """Extract per-segment feature matrices (.npy) at 50 frames/s."""
    _log_config("units.features", {"manifest": manifest_path, "kind": kind,
                                   "teacher": teacher_path or "", "layer": layer or ""})
    teacher = Checkpoint.load(teacher_path) if teacher_path else None
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for entry in read_manifest(manifest_path):
        rec = load_record(store_root, entry)
        feats = extract_features(rec, kind=kind, teacher=teacher, teacher_layer=layer)
        np.save(out_dir / f"{entry.id}.npy", feats.matrix)
        count += 1
    (out_dir / "features_meta.json").write_text(
        json.dumps({"kind": kind, "layer": layer}, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(f"extracted features for {count} segments")


@units.command("kmeans")
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--max-iters", type=int, default=100, show_default=True)
@click.option("--batch-size", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def units_kmeans(ctx, features_dir, k, seed, max_iters, batch_size, out_path):
    """Train the codebook over all feature matrices in a directory."""
    seed = ctx.obj["seed"] if seed is None else seed
    _log_config("units.kmeans", {"features": features_dir, "k": k, "seed": seed})
    meta = _features_meta(features_dir)
    files = sorted(Path(features_dir).glob("*.npy"))
    if not files:
        raise ConfigError(f"no feature files in {features_dir}")
    stack = np.concatenate([np.load(f) for f in files], axis=0)
    codebook = train_kmeans(stack, k=k, seed=seed, max_iters=max_iters,
                            batch_size=batch_size, feature_kind=meta["kind"])
    write_codebook(codebook, out_path, provenance="new")
    click.echo(f"codebook k={k} inertia={codebook.training_inertia:.4f}")


@units.command("assign")
@click.option("--features", "features_dir", required=True, type=click.Path(exists=True))
@click.option("--codebook", "codebook_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def units_assign(features_dir, codebook_path, out_path):
    """Label every frame with its nearest centroid."""
    _log_config("units.assign", {"features": features_dir, "codebook": codebook_path})
    from .units.features import FrameFeatures

    codebook = read_codebook(codebook_path)
    meta = _features_meta(features_dir)
    sequences = []
    for f in sorted(Path(features_dir).glob("*.npy")):
        feats = FrameFeatures(segment_id=f.stem, matrix=np.load(f),
                              feature_kind=meta["kind"])
        sequences.append(assign_targets(feats, codebook))
    write_targets(sequences, out_path)
    click.echo(f"assigned targets for {len(sequences)} segments")


@cli.group()
def ssl():
    """Masked-prediction pretraining."""


@ssl.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--valid", "valid_path", required=True, type=click.Path(exists=True))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def ssl_train(config_path, manifest_path, valid_path, targets_path, store_root, out_dir):
    """One pretraining run; keeps the checkpoint with the lowest
    validation loss."""
    cfg = TrainRunConfig.from_file(config_path)
    _log_config("ssl.train", {"config": config_path, "manifest": manifest_path,
                              "mode": cfg.mode, "seed": cfg.seed})
    from .units.targets import read_targets

    ckpt, history, _ = train_ssl(
        cfg,
        read_manifest(manifest_path),
        read_manifest(valid_path),
        read_targets(targets_path),
        store_root=store_root,
        out_dir=out_dir,
    )
    click.echo(f"best step {ckpt.step} validation loss {ckpt.validation_loss:.6f}")


@ssl.command("select")
@click.option("--history", "history_path", required=True, type=click.Path(exists=True))
def ssl_select(history_path):
    """Pick the step with the lowest validation loss from a loss curve."""
    history = read_history_csv(history_path)
    step = select_checkpoint(history)
    click.echo(str(step))


@cli.group()
def heads():
    """Supervised fine-tuning and decoding."""


def _read_split_manifest(path):
    entries = read_manifest(path)
    return {s: [e for e in entries if e.split == s] for s in ("train", "valid", "test")}


@heads.command("slid")
@click.option("--encoder", "encoder_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--african-set", "african_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def heads_slid(ctx, encoder_path, data_path, store_root, config_path, african_path, out_dir):
    """Grid fine-tuning of the language-identification head."""
    cfg = FinetuneConfig.from_file(config_path) if config_path else FinetuneConfig(task="slid")
    _log_config("heads.slid", {"encoder": encoder_path, "data": data_path})
    splits = _read_split_manifest(data_path)
    label_set = sorted({e.lang for e in splits["train"]})
    african = _read_african_set(african_path, label_set)
    result = train_slid(
        Checkpoint.load(encoder_path), splits["train"], splits["valid"], splits["test"],
        store_root, cfg, label_set, african_subset=african, out_dir=out_dir,
        base_seed=ctx.obj["seed"],
    )
    click.echo(f"best lr {result.best_lr:g} macro F1 avg*={result.aggregate.avg_star('f1'):.4f}")


@heads.command("asr")
@click.option("--encoder", "encoder_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--transcripts", "transcripts_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True),
              help="Existing vocabulary; built from the train split when omitted.")
@click.option("--vocab-size", type=int, default=432, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--african-set", "african_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def heads_asr(ctx, encoder_path, data_path, store_root, transcripts_path, vocab_path,
              vocab_size, config_path, african_path, out_dir):
    """Grid fine-tuning of the CTC recognition head."""
    cfg = FinetuneConfig.from_file(config_path) if config_path else FinetuneConfig(task="asr")
    _log_config("heads.asr", {"encoder": encoder_path, "data": data_path})
    splits = _read_split_manifest(data_path)
    transcripts = read_transcripts(transcripts_path)
    if vocab_path:
        vocab = CharVocab.from_file(vocab_path)
    else:
        vocab = build_char_vocab(
            [transcripts[e.id] for e in splits["train"] if e.id in transcripts],
            size=vocab_size,
        )
        vocab.to_file(Path(out_dir) / "char_vocab.json")
    african = _read_african_set(african_path, sorted({e.lang for e in splits["train"]}))
    result = train_asr(
        Checkpoint.load(encoder_path), splits["train"], splits["valid"], splits["test"],
        transcripts, vocab, store_root, cfg, african_subset=african, out_dir=out_dir,
        base_seed=ctx.obj["seed"],
    )
    click.echo(f"best lr {result.best_lr:g} WER avg*={result.aggregate.avg_star('wer'):.4f}")


@heads.command("decode")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--transcripts", "transcripts_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def heads_decode(model_path, vocab_path, data_path, store_root, transcripts_path, out_path):
    """Greedy CTC decoding of a manifest with a fine-tuned model."""
    _log_config("heads.decode", {"model": model_path, "data": data_path})
    from .pretrain.train import AudioStore

    encoder, head, _ = load_finetuned(model_path)
    vocab = CharVocab.from_file(vocab_path)
    entries = read_manifest(data_path)
    transcripts = read_transcripts(transcripts_path) if transcripts_path else {}
    rows = evaluate_asr(encoder, head, entries, transcripts, vocab,
                        AudioStore(store_root))
    lines = ["\t".join(("utterance_id", "reference", "hypothesis"))]
    lines.extend(f"{r[0]}\t{r[2]}\t{r[3]}" for r in rows)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"decoded {len(rows)} utterances")


def _read_african_set(path, fallback):
    if path is None:
        return tuple(fallback)
    langs = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("lang"):
            continue
        cols = line.split("\t")
        if len(cols) >= 2 and cols[1] in ("0", "1"):
            if cols[1] == "1":
                langs.append(cols[0])
        else:
            langs.append(cols[0].strip())
    return tuple(langs)


@cli.group()
def metrics():
    """Scoring of prediction files."""


def _read_two_col(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("utterance_id"):
            continue
        cols = line.split("\t")
        out[cols[0]] = cols[1:]
    return out


@metrics.command("score")
@click.option("--task", type=click.Choice(["slid", "asr"]), required=True)
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True))
@click.option("--african-set", "african_path", type=click.Path(exists=True))
@click.option("--out-dir", "out_dir", type=click.Path())
def metrics_score(task, pred_path, ref_path, african_path, out_dir):
    """Score predictions against references.

    slid: ref rows are `id<TAB>lang`, pred rows `id<TAB>lang`.
    asr: ref rows are `id<TAB>lang<TAB>text`, pred rows `id<TAB>text`.
    """
    _log_config("metrics.score", {"task": task, "pred": pred_path, "ref": ref_path})
    refs = _read_two_col(ref_path)
    preds = _read_two_col(pred_path)
    missing = sorted(set(refs) - set(preds))
    if missing:
        raise DataError(f"predictions missing for {len(missing)} utterances: {missing[:5]}")
    if task == "slid":
        ids = sorted(refs)
        labels = [refs[i][0] for i in ids]
        predictions = [preds[i][0] for i in ids]
        language_set = sorted(set(labels) | set(predictions))
        african = _read_african_set(african_path, language_set)
        report = macro_f1(labels, predictions, language_set, african)
        matrix = confusion_matrix(labels, predictions, language_set)
        click.echo(report.table())
        pairs = confusion_analysis(matrix)
        for p in pairs:
            click.echo(
                f"asymmetric confusion {p['from']}->{p['to']}: "
                f"{p['rate']:.2f} vs {p['reverse_rate']:.2f}"
            )
        if out_dir:
            report.write(Path(out_dir) / "report.jsonl")
            (Path(out_dir) / "confusion.csv").write_text(matrix.to_csv(), encoding="utf-8")
    else:
        rows = []
        for utt_id in sorted(refs):
            lang, text = refs[utt_id][0], refs[utt_id][1]
            rows.append((utt_id, lang, text, preds[utt_id][0]))
        african = _read_african_set(african_path, sorted({r[1] for r in rows}))
        report = asr_language_report(rows, african_subset=african)
        click.echo(report.table())
        if out_dir:
            report.write(Path(out_dir) / "report.jsonl")


@cli.group()
def experiments():
    """Declarative experiment recipes."""


@experiments.command("run")
@click.option("--recipe", "recipe_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def experiments_run(recipe_path, out_dir):
    """Run a recipe end to end into a fresh output directory."""
    from .experiments.recipes import run_recipe

    _log_config("experiments.run", {"recipe": recipe_path, "out": out_dir})
    run_recipe(recipe_path, out_dir)
    click.echo(f"recipe complete: {out_dir}")


@cli.group()
def plots():
    """Report CSV/figure emission."""


@plots.command("emit")
@click.option("--kind", type=click.Choice(["durations", "low_resource", "variants"]),
              required=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--render/--no-render", default=True, show_default=True,
              help="Figures are best-effort; the CSV is always written.")
def plots_emit(kind, in_path, out_dir, render):
    """Emit the delimited data (contract) and optionally the figure."""
    from .plotting import plot_duration_bars, plot_grouped_bars, render_safely

    _log_config("plots.emit", {"kind": kind, "in": in_path, "render": render})
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = Path(in_path).read_text(encoding="utf-8")
    first = text.splitlines()[0] if text.strip() else ""

    if kind == "durations":
        if first.startswith("id\t"):
            lines = duration_csv_lines(compute_durations(read_manifest(in_path)))
        else:
            lines = [line for line in text.splitlines() if line]
            if not lines or lines[0] != "lang,total_hours":
                raise ConfigError(f"{in_path}: expected a manifest or a duration CSV")
        (out_dir / "durations.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rows = [line.split(",") for line in lines[1:]]
        if render and rows:
            render_safely(plot_duration_bars, rows, out_dir / "durations.png")
    elif kind == "low_resource":
        lines = [line for line in text.splitlines() if line]
        (out_dir / "low_resource.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rows = [line.split("\t") for line in lines[1:]]
        if render and rows:
            budgets = sorted({r[1] for r in rows}, key=lambda b: float(b))
            values = {(f"{r[1]}min", r[0]): float(r[3]) for r in rows if r[2] == "avg"}
            models = sorted({r[0] for r in rows})
            render_safely(
                plot_grouped_bars, [f"{b}min" for b in budgets], models, values,
                out_dir / "low_resource.png", "WER", "WER by budget",
            )
    else:
        lines = [line for line in text.splitlines() if line]
        (out_dir / "variants.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rows = [line.split("\t") for line in lines[1:]]
        if render and rows:
            values = {(r[0], "wer"): float(r[3]) for r in rows}
            render_safely(
                plot_grouped_bars, [r[0] for r in rows], ["wer"], values,
                out_dir / "variants.png", "WER avg*", "Variant comparison",
            )
    click.echo(f"emitted {kind} outputs to {out_dir}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.UsageError as exc:
        exc.show()
        return 2
    except click.exceptions.ClickException as exc:
        exc.show()
        return 2
    except (ConfigError, DataError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except MaftlabError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1


if __name__ == "__main__":
    sys.exit(main())
