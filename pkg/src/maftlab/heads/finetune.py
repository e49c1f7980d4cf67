"""Supervised fine-tuning: grid protocol shared by both tasks.

Each task runs a small grid: encoder learning rates drawn from
{1e-3, 1e-4, 1e-5} crossed with 3 random seeds. The encoder trains with
Adam at the grid rate; the classification head uses Adam at a fixed 1e-3,
the CTC head Adadelta at 1.0. The best rate is picked on validation
(macro F1 for language identification, WER for recognition) and reported
metrics are means over the seeds at that rate.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .. import kv
from ..corpus.manifest import base_id
from ..errors import ConfigError, DataError
from ..metrics.classification import MetricReport, confusion_matrix, macro_f1
from ..metrics.edits import edit_distance
from ..pretrain.train import AudioStore
from ..seeding import derive_seed, rng_for
from .asr import AsrHead, decode_ctc_greedy
from .data import cap_slid_data, sample_asr_hours
from .pooling import SlidHead
from .vocab import normalize_text

LR_GRID = (1e-3, 1e-4, 1e-5)


@dataclass
class FinetuneConfig:
    task: str
    encoder_lrs: tuple = LR_GRID
    seeds: tuple = (0, 1, 2)
    epochs: int = None
    batch_size: int = None
    head_lr: float = None
    slid_cap: int = 1030
    asr_hours: float = 3.0
    slid_hidden: int = 512
    asr_ffn: int = 1024

    def __post_init__(self):
        if self.epochs is None:
            self.epochs = 20 if self.task == "slid" else 30
        if self.batch_size is None:
            self.batch_size = 32 if self.task == "slid" else 16
        if self.head_lr is None:
            self.head_lr = 1e-3 if self.task == "slid" else 1.0
        self.encoder_lrs = tuple(float(lr) for lr in self.encoder_lrs)
        self.seeds = tuple(int(s) for s in self.seeds)

    def validate(self):
        if self.task not in ("slid", "asr"):
            raise ConfigError(f"task must be slid or asr, got {self.task!r}")
        for lr in self.encoder_lrs:
            if lr not in LR_GRID:
                raise ConfigError(f"encoder lr {lr} outside the grid {LR_GRID}")
        if len(self.seeds) != 3:
            raise ConfigError("the protocol uses exactly 3 random seeds")
        return self

    @classmethod
    def from_file(cls, path) -> "FinetuneConfig":
        raw = kv.load_kv(path)
        return cls(
            task=kv.get_str(raw, "task"),
            encoder_lrs=tuple(float(x) for x in kv.get_list(raw, "encoder_lrs", LR_GRID)),
            seeds=tuple(int(x) for x in kv.get_list(raw, "seeds", (0, 1, 2))),
            epochs=kv.get_int(raw, "epochs", 0) or None,
            batch_size=kv.get_int(raw, "batch_size", 0) or None,
            head_lr=kv.get_float(raw, "head_lr", 0.0) or None,
            slid_cap=kv.get_int(raw, "slid_cap", 1030),
            asr_hours=kv.get_float(raw, "asr_hours", 3.0),
            slid_hidden=kv.get_int(raw, "slid_hidden", 512),
            asr_ffn=kv.get_int(raw, "asr_ffn", 1024),
        ).validate()

    def to_file(self, path):
        raw = asdict(self)
        raw["encoder_lrs"] = ",".join(f"{lr:g}" for lr in self.encoder_lrs)
        raw["seeds"] = ",".join(str(s) for s in self.seeds)
        Path(path).write_text(kv.dump_kv(raw), encoding="utf-8")


@dataclass
class RunResult:
    lr: float
    seed: int
    valid_metric: float
    test_rows: list
    run_dir: Path = None


@dataclass
class TaskResult:
    task: str
    best_lr: float
    runs: list
    aggregate: MetricReport
    skip_report: dict = field(default_factory=dict)
    confusion: object = None


def _collate(entries, store: AudioStore):
    waves = [store.waveform(e) for e in entries]
    lengths = [len(w) for w in waves]
    padded = np.zeros((len(waves), max(lengths)), dtype=np.float32)
    for i, w in enumerate(waves):
        padded[i, : len(w)] = w
    return torch.from_numpy(padded), lengths


def _frame_mask(model, t_max: int, lengths) -> torch.Tensor:
    frames = torch.as_tensor([model.frame_count(int(n)) for n in lengths])
    return torch.arange(t_max)[None, :] < frames[:, None]


def _minibatches(entries, batch_size: int, rng=None):
    order = rng.permutation(len(entries)) if rng is not None else np.arange(len(entries))
    for a in range(0, len(entries), batch_size):
        yield [entries[i] for i in order[a : a + batch_size]]


def evaluate_slid(encoder, head, entries, store, label_set, batch_size: int = 32) -> list:
    """(utterance_id, true_lang, predicted_lang) rows."""
    return _slid_predict(encoder, head, entries, store, sorted(set(label_set)), batch_size)


def evaluate_asr(encoder, head, entries, transcripts, vocab, store, batch_size: int = 16):
    """(utterance_id, lang, reference, hypothesis) rows via greedy decoding."""
    encoder.eval()
    head.eval()
    rows = []
    with torch.no_grad():
        for batch in _minibatches(entries, batch_size):
            waves, lengths = _collate(batch, store)
            reps = encoder.encode(waves, lengths=lengths)
            logits = head(reps)
            for i, entry in enumerate(batch):
                t = encoder.frame_count(lengths[i])
                hyp = decode_ctc_greedy(logits[i, :t], vocab)
                ref = normalize_text(transcripts[base_id(entry.id)])
                rows.append((entry.id, entry.lang, ref, hyp))
    return rows


def asr_language_report(rows, african_subset=(), n_seeds: int = 1) -> MetricReport:
    """Per-language WER/CER with edit counts pooled inside each language."""
    pooled: dict = {}
    for _, lang, ref, hyp in rows:
        slot = pooled.setdefault(lang, {"we": 0, "wn": 0, "ce": 0, "cn": 0})
        ref_tokens = ref.split()
        slot["we"] += edit_distance(ref_tokens, hyp.split()).total
        slot["wn"] += len(ref_tokens)
        slot["ce"] += edit_distance(list(ref), list(hyp)).total
        slot["cn"] += len(ref)
    per_language = {
        lang: {
            "wer": slot["we"] / slot["wn"] if slot["wn"] else float("nan"),
            "cer": slot["ce"] / slot["cn"] if slot["cn"] else float("nan"),
        }
        for lang, slot in pooled.items()
    }
    return MetricReport(
        task="asr",
        per_language=per_language,
        african_subset=set(african_subset),
        metrics=["wer", "cer"],
        n_seeds=n_seeds,
    )


def _aggregate_over_seeds(reports, task: str, metrics, african_subset) -> MetricReport:
    langs = sorted({lang for r in reports for lang in r.per_language})
    per_language = {}
    for lang in langs:
        per_language[lang] = {
            m: float(np.mean([r.per_language[lang][m] for r in reports
                              if lang in r.per_language]))
            for m in metrics
        }
    return MetricReport(
        task=task,
        per_language=per_language,
        african_subset=set(african_subset),
        metrics=list(metrics),
        n_seeds=len(reports),
    )


def write_predictions(rows, path, header):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(header)]
    lines.extend("\t".join(str(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_dir(out_dir, lr, seed) -> Path:
    return Path(out_dir) / f"lr{lr:g}" / f"seed{seed}"


def _save_run(run_dir, cfg, encoder, head, head_config, epoch_rows, pred_rows,
              pred_header, extra_meta):
    from dataclasses import asdict as dc_asdict

    run_dir.mkdir(parents=True, exist_ok=True)
    cfg.to_file(run_dir / "effective_config.txt")
    lines = ["epoch,train_loss,valid_metric"]
    lines.extend(f"{e},{tl:.6f},{vm:.6f}" for e, tl, vm in epoch_rows)
    (run_dir / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    torch.save(
        {
            "encoder_state": encoder.state_dict(),
            "head_state": head.state_dict(),
            "encoder_config": dc_asdict(encoder.cfg),
            "num_units": encoder.num_units,
            "head_config": head_config,
            "meta": extra_meta,
        },
        run_dir / "model.pt",
    )
    write_predictions(pred_rows, run_dir / "predictions.tsv", pred_header)
    (run_dir / "run_meta.json").write_text(
        json.dumps(extra_meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_finetuned(path):
    """Rebuild (encoder, head, meta) from a saved fine-tuning run."""
    from ..pretrain.model import EncoderConfig, MaskedPredictionModel
    from .asr import AsrHead
    from .pooling import SlidHead

    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    encoder = MaskedPredictionModel(
        EncoderConfig.from_dict(payload["encoder_config"]), payload["num_units"]
    )
    encoder.load_state_dict(payload["encoder_state"])
    hc = payload["head_config"]
    if hc["task"] == "slid":
        head = SlidHead(hc["model_dim"], hc["num_languages"], hc["hidden_dim"])
    else:
        head = AsrHead(hc["model_dim"], hc["vocab_size"], hc["ffn_dim"])
    head.load_state_dict(payload["head_state"])
    return encoder, head, payload["meta"]


def train_slid(ckpt, train_entries, valid_entries, test_entries, store_root,
               cfg: FinetuneConfig, label_set, african_subset=(), out_dir=None,
               base_seed: int = 0) -> TaskResult:
    """Grid fine-tuning for spoken language identification.

    Jointly trains the encoder and an attentive-pooling classifier per
    (lr, seed); picks the lr with the best mean validation macro F1 and
    aggregates test metrics over seeds at that rate.
    """
    cfg.validate()
    label_set = sorted(set(label_set))
    label_index = {lang: i for i, lang in enumerate(label_set)}
    for entry in list(train_entries) + list(valid_entries) + list(test_entries):
        if entry.lang not in label_index:
            raise DataError(f"label {entry.lang!r} outside the configured language set")

    store = AudioStore(store_root)
    runs = []
    for lr in cfg.encoder_lrs:
        for seed in cfg.seeds:
            torch.manual_seed(derive_seed(base_seed, "slid-init", seed))
            encoder = ckpt.build_model()
            head = SlidHead(encoder.cfg.model_dim, len(label_set), cfg.slid_hidden)
            capped = cap_slid_data(train_entries, cfg.slid_cap,
                                   seed=derive_seed(base_seed, "slid-cap", seed))
            enc_opt = torch.optim.Adam(encoder.parameters(), lr=lr)
            head_opt = torch.optim.Adam(head.parameters(), lr=cfg.head_lr)

            epoch_rows = []
            for epoch in range(1, cfg.epochs + 1):
                encoder.train()
                head.train()
                rng = rng_for(base_seed, "slid-epoch", lr, seed, epoch)
                losses = []
                for batch in _minibatches(capped, cfg.batch_size, rng):
                    waves, lengths = _collate(batch, store)
                    reps = encoder.encode(waves, lengths=lengths)
                    mask = _frame_mask(encoder, reps.shape[1], lengths)
                    logits = head(reps, frame_mask=mask)
                    target = torch.tensor([label_index[e.lang] for e in batch])
                    loss = F.cross_entropy(logits, target)
                    enc_opt.zero_grad()
                    head_opt.zero_grad()
                    loss.backward()
                    enc_opt.step()
                    head_opt.step()
                    losses.append(loss.item())
                valid_rows = _slid_predict(encoder, head, valid_entries, store,
                                           label_set, cfg.batch_size)
                valid_f1 = macro_f1(
                    [r[1] for r in valid_rows], [r[2] for r in valid_rows],
                    label_set, african_subset,
                ).avg_star("f1")
                epoch_rows.append((epoch, float(np.mean(losses)), valid_f1))

            test_rows = _slid_predict(encoder, head, test_entries, store,
                                      label_set, cfg.batch_size)
            run = RunResult(lr=lr, seed=seed,
                            valid_metric=epoch_rows[-1][2] if epoch_rows else 0.0,
                            test_rows=test_rows)
            if out_dir is not None:
                run.run_dir = _run_dir(out_dir, lr, seed)
                _save_run(run.run_dir, cfg, encoder, head,
                          {"task": "slid", "model_dim": encoder.cfg.model_dim,
                           "num_languages": len(label_set),
                           "hidden_dim": cfg.slid_hidden},
                          epoch_rows, test_rows,
                          ("utterance_id", "label", "predicted"),
                          {"task": "slid", "lr": lr, "seed": seed,
                           "valid_f1": run.valid_metric,
                           "label_set": label_set})
            runs.append(run)

    best_lr = max(
        cfg.encoder_lrs,
        key=lambda lr: np.mean([r.valid_metric for r in runs if r.lr == lr]),
    )
    best_runs = [r for r in runs if r.lr == best_lr]
    reports = [
        macro_f1([row[1] for row in r.test_rows], [row[2] for row in r.test_rows],
                 label_set, african_subset)
        for r in best_runs
    ]
    aggregate = _aggregate_over_seeds(reports, "slid", ["f1"], african_subset)
    pooled_rows = [row for r in best_runs for row in r.test_rows]
    confusion = confusion_matrix([r[1] for r in pooled_rows],
                                 [r[2] for r in pooled_rows], label_set)
    result = TaskResult(task="slid", best_lr=best_lr, runs=runs,
                        aggregate=aggregate, confusion=confusion)
    if out_dir is not None:
        _write_task_summary(out_dir, result)
    return result


def _slid_predict(encoder, head, entries, store, label_set, batch_size) -> list:
    encoder.eval()
    head.eval()
    rows = []
    with torch.no_grad():
        for batch in _minibatches(entries, batch_size):
            waves, lengths = _collate(batch, store)
            reps = encoder.encode(waves, lengths=lengths)
            mask = _frame_mask(encoder, reps.shape[1], lengths)
            pred = head(reps, frame_mask=mask).argmax(dim=-1)
            rows.extend(
                (e.id, e.lang, label_set[i]) for e, i in zip(batch, pred.tolist())
            )
    return rows


def train_asr(ckpt, train_entries, valid_entries, test_entries, transcripts,
              vocab, store_root, cfg: FinetuneConfig, african_subset=(),
              out_dir=None, base_seed: int = 0) -> TaskResult:
    """Grid fine-tuning for multilingual recognition with CTC.

    Per-language training audio is capped by duration (`asr_hours`); the
    best lr is picked on validation WER. Decoding is greedy; no language
    model anywhere. Utterances with empty normalized transcripts are
    skipped and counted in the skip report.
    """
    cfg.validate()
    store = AudioStore(store_root)

    def usable(entries):
        kept, skipped = [], 0
        for entry in entries:
            text = normalize_text(transcripts.get(base_id(entry.id), ""))
            if not text:
                skipped += 1
                continue
            kept.append(entry)
        return kept, skipped

    skip_report = {}
    train_entries, skip_report["train"] = usable(train_entries)
    valid_entries, skip_report["valid"] = usable(valid_entries)
    test_entries, skip_report["test"] = usable(test_entries)
    if any(skip_report.values()):
        import warnings

        warnings.warn(
            f"skipped utterances with empty transcripts: {skip_report}",
            stacklevel=2,
        )

    # Fail fast on unencodable characters before any training.
    for entry in train_entries + valid_entries + test_entries:
        vocab.encode(transcripts[base_id(entry.id)], strict=True)

    runs = []
    for lr in cfg.encoder_lrs:
        for seed in cfg.seeds:
            torch.manual_seed(derive_seed(base_seed, "asr-init", seed))
            encoder = ckpt.build_model()
            head = AsrHead(encoder.cfg.model_dim, vocab.size, cfg.asr_ffn)
            sampled = sample_asr_hours(train_entries, cfg.asr_hours,
                                       seed=derive_seed(base_seed, "asr-sample", seed))
            enc_opt = torch.optim.Adam(encoder.parameters(), lr=lr)
            head_opt = torch.optim.Adadelta(head.parameters(), lr=cfg.head_lr)

            epoch_rows = []
            for epoch in range(1, cfg.epochs + 1):
                encoder.train()
                head.train()
                rng = rng_for(base_seed, "asr-epoch", lr, seed, epoch)
                losses = []
                for batch in _minibatches(sampled, cfg.batch_size, rng):
                    waves, lengths = _collate(batch, store)
                    reps = encoder.encode(waves, lengths=lengths)
                    logits = head(reps)
                    log_probs = F.log_softmax(logits, dim=-1).transpose(0, 1)
                    targets = [vocab.encode(transcripts[base_id(e.id)]) for e in batch]
                    flat = torch.tensor([t for ids in targets for t in ids])
                    input_lengths = torch.tensor(
                        [encoder.frame_count(n) for n in lengths]
                    )
                    target_lengths = torch.tensor([len(ids) for ids in targets])
                    loss = F.ctc_loss(log_probs, flat, input_lengths, target_lengths,
                                      blank=vocab.blank_id, zero_infinity=True)
                    enc_opt.zero_grad()
                    head_opt.zero_grad()
                    loss.backward()
                    enc_opt.step()
                    head_opt.step()
                    losses.append(loss.item())
                valid_rows = evaluate_asr(encoder, head, valid_entries, transcripts,
                                          vocab, store, cfg.batch_size)
                valid_wer = asr_language_report(valid_rows).avg_star("wer")
                epoch_rows.append((epoch, float(np.mean(losses)), valid_wer))

            test_rows = evaluate_asr(encoder, head, test_entries, transcripts,
                                     vocab, store, cfg.batch_size)
            run = RunResult(lr=lr, seed=seed,
                            valid_metric=epoch_rows[-1][2] if epoch_rows else math.inf,
                            test_rows=test_rows)
            if out_dir is not None:
                run.run_dir = _run_dir(out_dir, lr, seed)
                _save_run(run.run_dir, cfg, encoder, head,
                          {"task": "asr", "model_dim": encoder.cfg.model_dim,
                           "vocab_size": vocab.size, "ffn_dim": cfg.asr_ffn},
                          epoch_rows,
                          [(r[0], r[2], r[3]) for r in test_rows],
                          ("utterance_id", "reference", "hypothesis"),
                          {"task": "asr", "lr": lr, "seed": seed,
                           "valid_wer": run.valid_metric,
                           "skip_report": skip_report,
                           "train_languages": sorted({e.lang for e in train_entries})})
            runs.append(run)

    best_lr = min(
        cfg.encoder_lrs,
        key=lambda lr: np.mean([r.valid_metric for r in runs if r.lr == lr]),
    )
    best_runs = [r for r in runs if r.lr == best_lr]
    reports = [asr_language_report(r.test_rows, african_subset) for r in best_runs]
    aggregate = _aggregate_over_seeds(reports, "asr", ["wer", "cer"], african_subset)
    result = TaskResult(task="asr", best_lr=best_lr, runs=runs,
                        aggregate=aggregate, skip_report=skip_report)
    if out_dir is not None:
        _write_task_summary(out_dir, result)
    return result


def _write_task_summary(out_dir, result: TaskResult):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.aggregate.write(out_dir / "report.jsonl")
    summary = {
        "task": result.task,
        "best_lr": result.best_lr,
        "runs": [
            {"lr": r.lr, "seed": r.seed, "valid_metric": r.valid_metric}
            for r in result.runs
        ],
        "skip_report": result.skip_report,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    if result.confusion is not None:
        (out_dir / "confusion.csv").write_text(result.confusion.to_csv(), encoding="utf-8")
