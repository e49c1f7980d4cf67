"""Declarative experiment recipes.

A recipe is a key=value file with a `kind`, a seed, an optional stage list,
and kind-specific parameters. Each kind maps to one study design: the
three-variant comparison, cross-corpus generalization under a synthetic
domain shift, low-resource fine-tuning budgets, and multi-dialect
recognition. Reports are TSV/JSONL (the contract) plus best-effort
figures; rerunning a recipe with the same seed reproduces the report files
byte for byte.
"""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .. import kv
from ..errors import ConfigError, DataError
from ..heads.data import read_transcripts
from ..heads.finetune import (
    FinetuneConfig,
    asr_language_report,
    evaluate_asr,
    load_finetuned,
    train_asr,
)
from ..heads.vocab import CharVocab, build_char_vocab
from ..corpus.manifest import read_manifest
from ..pretrain.train import AudioStore
from ..plotting import plot_grouped_bars, render_safely
from ..seeding import derive_seed
from .pipeline import (
    MODES,
    FinetuneSpec,
    WorldConfig,
    build_teacher,
    build_variants,
    finetune_checkpoint,
    prepare_world,
)
from .synth import make_dialect_corpus, make_noisy_copy, make_toy_corpus

RECIPE_STAGES = {
    "variant_comparison": ("synthesize", "prepare", "teacher", "variants", "finetune", "report"),
    "cross_corpus": ("evaluate_in_domain", "shift", "evaluate_out_of_domain", "report"),
    "low_resource": ("synthesize", "finetune", "report"),
    "multidialect": ("synthesize", "finetune", "report"),
}


@dataclass
class ExperimentRecipe:
    kind: str
    name: str
    seed: int
    stages: tuple
    params: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def validate(self):
        if self.kind not in RECIPE_STAGES:
            raise ConfigError(f"unknown recipe kind {self.kind!r}")
        known = RECIPE_STAGES[self.kind]
        order = [known.index(s) for s in self.stages if s in known]
        if len(order) != len(self.stages) or order != sorted(order):
            raise ConfigError(
                f"stages {self.stages} must be an in-order subset of {known}"
            )
        for key, value in self.params.items():
            if key.endswith(("_config", "_file")) and value:
                path = self.resolve(value)
                if not path.exists():
                    raise ConfigError(f"recipe references missing file {path}")
        return self

    def resolve(self, value) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def get(self, key, default=None):
        return self.params.get(key, default)

    def get_float(self, key, default):
        return kv.get_float(self.params, key, default)

    def get_int(self, key, default):
        return kv.get_int(self.params, key, default)

    def get_list(self, key, default):
        return kv.get_list(self.params, key, default)

    @classmethod
    def from_file(cls, path) -> "ExperimentRecipe":
        path = Path(path)
        raw = kv.load_kv(path)
        kind = kv.get_str(raw, "kind")
        stages = tuple(kv.get_list(raw, "stages", RECIPE_STAGES.get(kind, ())))
        reserved = {"kind", "name", "seed", "stages"}
        return cls(
            kind=kind,
            name=raw.get("name", path.stem),
            seed=kv.get_int(raw, "seed", 0),
            stages=stages,
            params={k: v for k, v in raw.items() if k not in reserved},
            base_dir=path.parent,
        ).validate()


def published_reference() -> dict:
    blob = resources.files("maftlab").joinpath("data/published_reference.json")
    return json.loads(blob.read_text(encoding="utf-8"))


def _write_tsv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(header)]
    lines.extend("\t".join(str(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_jsonl(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows),
        encoding="utf-8",
    )


def _finetune_cfg(recipe: ExperimentRecipe, task: str) -> FinetuneConfig:
    # asr_ffn defaults to a desk-scale width here; the full-scale head
    # width (1024) stays the FinetuneConfig default.
    return FinetuneConfig(
        task=task,
        encoder_lrs=tuple(float(x) for x in recipe.get_list("encoder_lrs", ("1e-4",))),
        seeds=tuple(int(x) for x in recipe.get_list("finetune_seeds", ("0", "1", "2"))),
        epochs=recipe.get_int(f"{task}_epochs", 5 if task == "slid" else 10),
        batch_size=recipe.get_int(f"{task}_batch_size", 32 if task == "slid" else 16),
        slid_cap=recipe.get_int("slid_cap", 1030),
        asr_hours=recipe.get_float("asr_hours", 3.0),
        slid_hidden=recipe.get_int("slid_hidden", 512),
        asr_ffn=recipe.get_int("asr_ffn", 256),
    )


def _world_config(recipe: ExperimentRecipe) -> WorldConfig:
    return WorldConfig(
        seed=recipe.seed,
        min_lang_total=recipe.get_float("min_lang_total", 60.0),
        carve_small_quota=recipe.get_float("carve_small_quota", 30.0),
        carve_big_quota=recipe.get_float("carve_big_quota", 60.0),
        alpha=recipe.get_float("alpha", 0.8),
        excluded=tuple(recipe.get_list("excluded", ())),
        upsample_factor=recipe.get_float("upsample_factor", 1.3),
        num_units=recipe.get_int("num_units", 32),
        teacher_steps=recipe.get_int("teacher_steps", 1400),
        teacher_peak_lr=recipe.get_float("teacher_peak_lr", 1.5e-3),
        maft_steps=recipe.get_int("maft_steps", 150),
        scratch_steps=recipe.get_int("scratch_steps", 600),
        max_batch_tokens=recipe.get_int("max_batch_tokens", 128000),
        validate_every=recipe.get_int("validate_every", 50),
    )


def _toy_corpus(recipe: ExperimentRecipe, out_dir: Path) -> Path:
    corpus_dir = recipe.get("corpus_dir")
    if corpus_dir:
        return recipe.resolve(corpus_dir)
    corpus_dir = out_dir / "corpus"
    make_toy_corpus(
        corpus_dir,
        seed=derive_seed(recipe.seed, "corpus"),
        pretrain_seconds_per_lang=recipe.get_float("pretrain_seconds_per_lang", 200.0),
        labeled_train=recipe.get_int("labeled_train", 120),
        labeled_valid=recipe.get_int("labeled_valid", 24),
        labeled_test=recipe.get_int("labeled_test", 30),
    )
    return corpus_dir


def run_variant_comparison(recipe: ExperimentRecipe, out_dir) -> dict:
    """Pretrain the three construction modes and fine-tune each on both
    tasks; emits a benchmark-shaped report (rows = variants, columns =
    F1 avg*/avg and WER avg*/avg)."""
    out_dir = Path(out_dir)
    corpus = _toy_corpus(recipe, out_dir)
    world = prepare_world(corpus, out_dir / "work", _world_config(recipe))
    teacher = build_teacher(world)
    variants = build_variants(world, teacher)

    african = set(recipe.get_list("african_langs", ("aaa", "bbb")))
    spec = FinetuneSpec(
        slid=_finetune_cfg(recipe, "slid"),
        asr=_finetune_cfg(recipe, "asr"),
        vocab_size=recipe.get_int("vocab_size", 64),
        african_subset=tuple(sorted(african)),
    )

    results, rows, json_rows = {}, [], []
    for mode in MODES:
        results[mode] = finetune_checkpoint(
            world, variants[mode], spec, out_dir / "finetune" / mode
        )
        slid = results[mode]["slid"].aggregate
        asr = results[mode]["asr"].aggregate
        rows.append(
            [
                mode,
                f"{slid.avg_star('f1'):.4f}",
                f"{slid.avg('f1'):.4f}",
                f"{asr.avg_star('wer'):.4f}",
                f"{asr.avg('wer'):.4f}",
            ]
        )
        json_rows.append(
            {
                "variant": mode,
                "slid_f1_avg_star": slid.avg_star("f1"),
                "slid_f1_avg": slid.avg("f1"),
                "asr_wer_avg_star": asr.avg_star("wer"),
                "asr_wer_avg": asr.avg("wer"),
                "slid_best_lr": results[mode]["slid"].best_lr,
                "asr_best_lr": results[mode]["asr"].best_lr,
            }
        )

    header = ["variant", "slid_f1_avg_star", "slid_f1_avg", "asr_wer_avg_star", "asr_wer_avg"]
    _write_tsv(out_dir / "report.tsv", header, rows)
    _write_jsonl(out_dir / "report.jsonl", json_rows)
    (out_dir / "published_reference.json").write_text(
        json.dumps(
            {"note": published_reference()["note"],
             "benchmark": published_reference()["benchmark"]},
            indent=2, sort_keys=True,
        ) + "\n",
        encoding="utf-8",
    )
    if recipe.get("render_figures", "true").lower() != "false":
        values = {}
        for row in json_rows:
            values[(row["variant"], "slid_f1")] = row["slid_f1_avg_star"]
            values[(row["variant"], "asr_wer")] = row["asr_wer_avg_star"]
        figures = out_dir / "figures"
        figures.mkdir(parents=True, exist_ok=True)
        render_safely(
            plot_grouped_bars, list(MODES), ["slid_f1"],
            {k: v for k, v in values.items() if k[1] == "slid_f1"},
            figures / "variants_slid_f1.png", "macro F1", "Language ID by variant",
        )
        render_safely(
            plot_grouped_bars, list(MODES), ["asr_wer"],
            {k: v for k, v in values.items() if k[1] == "asr_wer"},
            figures / "variants_asr_wer.png", "WER", "Recognition by variant",
        )
    return {"world": world, "variants": variants, "results": results}


def run_cross_corpus(recipe: ExperimentRecipe, out_dir) -> dict:
    """Evaluate a trained recognizer in-domain and on a noise-shifted copy
    of the same test set (the synthetic stand-in for another corpus)."""
    out_dir = Path(out_dir)
    model_path = recipe.resolve(kv.get_str(recipe.params, "model_file"))
    vocab = CharVocab.from_file(recipe.resolve(kv.get_str(recipe.params, "vocab_file")))
    corpus_root = recipe.resolve(kv.get_str(recipe.params, "corpus_dir"))
    encoder, head, meta = load_finetuned(model_path)
    trained_langs = set(meta.get("train_languages", ()))

    entries = [
        e for e in read_manifest(corpus_root / "labeled.tsv") if e.split == "test"
    ]
    transcripts = read_transcripts(corpus_root / "transcripts.tsv")
    african = set(recipe.get_list("african_langs", sorted({e.lang for e in entries})))

    def evaluate(root, eval_entries):
        rows = evaluate_asr(encoder, head, eval_entries, transcripts, vocab,
                            AudioStore(root), batch_size=16)
        return asr_language_report(rows, african_subset=african)

    in_report = evaluate(corpus_root, entries)

    noisy_dir = out_dir / "noisy"
    noisy_entries = make_noisy_copy(
        corpus_root, entries, noisy_dir,
        snr_db=recipe.get_float("snr_db", 10.0),
        seed=derive_seed(recipe.seed, "shift"),
    )
    out_report = evaluate(noisy_dir, noisy_entries)

    rows, json_rows = [], []
    for lang in sorted({e.lang for e in entries}):
        if lang not in trained_langs:
            rows.append([lang, "untrained", "untrained", "untrained", "untrained"])
            json_rows.append({"lang": lang, "status": "untrained"})
            continue
        vals = [
            in_report.per_language[lang]["cer"],
            in_report.per_language[lang]["wer"],
            out_report.per_language[lang]["cer"],
            out_report.per_language[lang]["wer"],
        ]
        rows.append([lang] + [f"{v:.4f}" for v in vals])
        json_rows.append(
            {"lang": lang, "in_cer": vals[0], "in_wer": vals[1],
             "out_cer": vals[2], "out_wer": vals[3]}
        )
    rows.append(
        [
            "avg",
            f"{in_report.avg('cer'):.4f}",
            f"{in_report.avg('wer'):.4f}",
            f"{out_report.avg('cer'):.4f}",
            f"{out_report.avg('wer'):.4f}",
        ]
    )
    json_rows.append(
        {"lang": "avg", "in_cer": in_report.avg("cer"), "in_wer": in_report.avg("wer"),
         "out_cer": out_report.avg("cer"), "out_wer": out_report.avg("wer")}
    )
    _write_tsv(out_dir / "report.tsv", ["lang", "in_cer", "in_wer", "out_cer", "out_wer"], rows)
    _write_jsonl(out_dir / "report.jsonl", json_rows)
    if recipe.get("render_figures", "true").lower() != "false":
        langs = [r["lang"] for r in json_rows if "in_wer" in r]
        values = {}
        for r in json_rows:
            if "in_wer" in r:
                values[(r["lang"], "in_domain")] = r["in_wer"]
                values[(r["lang"], "shifted")] = r["out_wer"]
        figures = out_dir / "figures"
        figures.mkdir(parents=True, exist_ok=True)
        render_safely(
            plot_grouped_bars, langs, ["in_domain", "shifted"], values,
            figures / "cross_corpus_wer.png", "WER", "In-domain vs shifted WER",
        )
    return {"in_domain": in_report, "out_of_domain": out_report}


def run_low_resource(recipe: ExperimentRecipe, out_dir) -> dict:
    """Fine-tune under 10- and 30-minute per-language budgets and emit the
    long-format CSV (model, budget_min, lang, wer, cer)."""
    out_dir = Path(out_dir)
    corpus = _toy_corpus(recipe, out_dir)
    ckpt_path = recipe.resolve(kv.get_str(recipe.params, "encoder_file"))
    from ..pretrain.model import Checkpoint

    ckpt = Checkpoint.load(ckpt_path)
    labeled = read_manifest(corpus / "labeled.tsv")
    splits = {s: [e for e in labeled if e.split == s] for s in ("train", "valid", "test")}
    transcripts = read_transcripts(corpus / "transcripts.tsv")
    vocab = build_char_vocab(
        [transcripts[e.id] for e in splits["train"]],
        size=recipe.get_int("vocab_size", 64),
    )
    vocab.to_file(out_dir / "char_vocab.json")
    african = set(recipe.get_list("african_langs", sorted({e.lang for e in labeled})))
    model_name = recipe.get("model_name", "desk-encoder")

    budgets = [int(b) for b in recipe.get_list("budgets_minutes", ("10", "30"))]
    reports = {}
    csv_rows = []
    for minutes in budgets:
        cfg = _finetune_cfg(recipe, "asr")
        cfg.asr_hours = minutes / 60.0
        result = train_asr(
            ckpt, splits["train"], splits["valid"], splits["test"], transcripts,
            vocab, corpus, cfg, african_subset=african,
            out_dir=out_dir / f"budget_{minutes}min",
            base_seed=derive_seed(recipe.seed, "low-resource", minutes),
        )
        reports[minutes] = result.aggregate
        for lang in sorted(result.aggregate.per_language):
            vals = result.aggregate.per_language[lang]
            csv_rows.append(
                [model_name, minutes, lang, f"{vals['wer']:.4f}", f"{vals['cer']:.4f}"]
            )
        csv_rows.append(
            [model_name, minutes, "avg",
             f"{result.aggregate.avg('wer'):.4f}", f"{result.aggregate.avg('cer'):.4f}"]
        )

    header = ["model", "budget_min", "lang", "wer", "cer"]
    _write_tsv(out_dir / "report.csv", header, csv_rows)
    _write_jsonl(
        out_dir / "report.jsonl",
        [dict(zip(header, row)) for row in csv_rows],
    )
    if recipe.get("render_figures", "true").lower() != "false":
        values = {}
        for row in csv_rows:
            if row[2] == "avg":
                values[(f"{row[1]}min", "wer")] = float(row[3])
        figures = out_dir / "figures"
        figures.mkdir(parents=True, exist_ok=True)
        render_safely(
            plot_grouped_bars, [f"{m}min" for m in budgets], ["wer"], values,
            figures / "low_resource_wer.png", "WER", "WER by per-language budget",
        )
    return reports


def run_multidialect(recipe: ExperimentRecipe, out_dir) -> dict:
    """Joint recognizer over three dialects with one shared size-63
    vocabulary; per-dialect CER/WER plus the average."""
    out_dir = Path(out_dir)
    corpus_dir = recipe.get("corpus_dir")
    if corpus_dir:
        corpus = recipe.resolve(corpus_dir)
    else:
        corpus = out_dir / "corpus"
        make_dialect_corpus(corpus, seed=derive_seed(recipe.seed, "dialects"))
    ckpt_path = recipe.resolve(kv.get_str(recipe.params, "encoder_file"))
    from ..pretrain.model import Checkpoint

    ckpt = Checkpoint.load(ckpt_path)
    labeled = read_manifest(corpus / "labeled.tsv")
    dialects = sorted({e.lang for e in labeled})
    allowed = set(recipe.get_list("dialects", dialects))
    unknown = [d for d in dialects if d not in allowed]
    if unknown:
        raise DataError(f"unknown dialect labels in corpus: {unknown}")
    splits = {s: [e for e in labeled if e.split == s] for s in ("train", "valid", "test")}
    transcripts = read_transcripts(corpus / "transcripts.tsv")

    vocab = build_char_vocab(
        [transcripts[e.id] for e in splits["train"]],
        size=recipe.get_int("vocab_size", 63),
    )
    vocab_path = out_dir / "char_vocab.json"
    vocab.to_file(vocab_path)

    cfg = _finetune_cfg(recipe, "asr")
    result = train_asr(
        ckpt, splits["train"], splits["valid"], splits["test"], transcripts,
        vocab, corpus, cfg, african_subset=dialects,
        out_dir=out_dir / "asr",
        base_seed=derive_seed(recipe.seed, "multidialect"),
    )
    rows, json_rows = [], []
    for dialect in dialects:
        vals = result.aggregate.per_language[dialect]
        rows.append([dialect, f"{vals['cer']:.4f}", f"{vals['wer']:.4f}"])
        json_rows.append({"dialect": dialect, "cer": vals["cer"], "wer": vals["wer"]})
    rows.append(["avg", f"{result.aggregate.avg('cer'):.4f}",
                 f"{result.aggregate.avg('wer'):.4f}"])
    json_rows.append({"dialect": "avg", "cer": result.aggregate.avg("cer"),
                      "wer": result.aggregate.avg("wer")})
    _write_tsv(out_dir / "report.tsv", ["dialect", "cer", "wer"], rows)
    _write_jsonl(out_dir / "report.jsonl", json_rows)
    summary = {
        "vocab_file": vocab_path.name,
        "vocab_size": vocab.size,
        "dialects": dialects,
        "best_lr": result.best_lr,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return {"result": result, "vocab": vocab, "report_rows": json_rows}


_RUNNERS = {
    "variant_comparison": run_variant_comparison,
    "cross_corpus": run_cross_corpus,
    "low_resource": run_low_resource,
    "multidialect": run_multidialect,
}


def run_recipe(recipe, out_dir):
    """Dispatch a recipe (path or ExperimentRecipe) to its runner."""
    if not isinstance(recipe, ExperimentRecipe):
        recipe = ExperimentRecipe.from_file(recipe)
    recipe.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "effective_recipe.txt").write_text(
        kv.dump_kv(
            {"kind": recipe.kind, "name": recipe.name, "seed": recipe.seed,
             "stages": ",".join(recipe.stages), **recipe.params}
        ),
        encoding="utf-8",
    )
    return _RUNNERS[recipe.kind](recipe, out_dir)
