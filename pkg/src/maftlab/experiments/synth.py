"""Synthetic corpus generator.

Each toy "language" is a five-tone inventory living in its own frequency
band with a language-specific harmonic timbre, so languages are separable
by spectrum alone. Utterances are words of one to three tones; transcripts
map each tone to one character, with word gaps rendered as silence. The
generator also writes long-form recordings (utterances separated by longer
pauses) so the activity detector has something real to cut.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus.audio import TARGET_RATE, write_wav
from ..corpus.manifest import ManifestEntry, write_manifest
from ..heads.data import write_transcripts
from ..seeding import rng_for

# Tone length balances discriminability (7 frames at 50 fps) against CTC
# blank pressure: long steady tones leave too few character emissions per
# frame for greedy decoding to escape the all-blank regime.
TONE_SEC = 0.10
WORD_GAP_SEC = 0.12
UTTERANCE_GAP = (0.45, 0.8)   # pause range inside long-form recordings
AMPLITUDE = 0.3


@dataclass(frozen=True)
class ToyLanguage:
    code: str
    tones: tuple          # five frequencies in Hz
    chars: str            # five characters, one per tone
    harmonic: float       # second-harmonic weight (timbre)


DEFAULT_LANGUAGES = (
    ToyLanguage("aaa", (350.0, 450.0, 560.0, 680.0, 800.0), "abcde", 0.0),
    ToyLanguage("bbb", (950.0, 1080.0, 1220.0, 1380.0, 1550.0), "fghij", 0.35),
    ToyLanguage("ccc", (1900.0, 2080.0, 2280.0, 2490.0, 2720.0), "klmno", 0.7),
)

DIALECTS = (
    # (code, frequency scale, extra noise sigma); "dlb" is deliberately scarce.
    ("dla", 1.0, 0.0),
    ("dlb", 1.1, 0.004),
    ("dlc", 0.92, 0.0),
)


def _tone(freq: float, rng, harmonic: float, sec: float = TONE_SEC) -> np.ndarray:
    n = int(sec * TARGET_RATE)
    t = np.arange(n) / TARGET_RATE
    phase = rng.uniform(0, 2 * np.pi)
    wave = np.sin(2 * np.pi * freq * t + phase)
    if harmonic:
        wave = wave + harmonic * np.sin(2 * np.pi * 2 * freq * t + phase)
        wave = wave / (1 + harmonic)
    fade = int(0.005 * TARGET_RATE)
    env = np.ones(n)
    env[:fade] = np.linspace(0, 1, fade)
    env[-fade:] = np.linspace(1, 0, fade)
    gain = AMPLITUDE * rng.uniform(0.85, 1.0)
    return gain * env * wave


def _utterance(lang: ToyLanguage, rng, min_words: int = 3, max_words: int = 4):
    """(samples, transcript) for one utterance of whole words."""
    pieces, words = [], []
    gap = np.zeros(int(WORD_GAP_SEC * TARGET_RATE))
    n_words = rng.integers(min_words, max_words + 1)
    for w in range(n_words):
        n_tones = rng.integers(2, 5)
        idx = rng.integers(0, len(lang.tones), size=n_tones)
        words.append("".join(lang.chars[i] for i in idx))
        for i in idx:
            pieces.append(_tone(lang.tones[i], rng, lang.harmonic))
        if w < n_words - 1:
            pieces.append(gap)
    return np.concatenate(pieces), " ".join(words)


def make_toy_corpus(
    root,
    seed: int = 0,
    languages=DEFAULT_LANGUAGES,
    pretrain_seconds_per_lang: float = 200.0,
    labeled_train: int = 120,
    labeled_valid: int = 24,
    labeled_test: int = 30,
) -> dict:
    """Write the full desk corpus under `root`.

    Layout: pretrain/ holds long-form recordings plus recordings.tsv;
    labeled/ holds utterance WAVs, labeled.tsv (train/valid/test splits)
    and transcripts.tsv. Returns a ledger with exact per-language totals.
    """
    root = Path(root)
    pretrain_dir = root / "pretrain"
    labeled_dir = root / "labeled"
    ledger = {"languages": [l.code for l in languages], "pretrain_seconds": {},
              "labeled_seconds": {}, "labeled_counts": {}}

    recording_entries = []
    for lang in languages:
        rng = rng_for(seed, "synth-pretrain", lang.code)
        total, rec_idx = 0.0, 0
        while total < pretrain_seconds_per_lang:
            pieces = [np.zeros(int(0.3 * TARGET_RATE))]
            target = min(75.0, pretrain_seconds_per_lang - total + 5.0)
            body = 0.0
            while body < target:
                utt, _ = _utterance(lang, rng)
                pieces.append(utt)
                pause = rng.uniform(*UTTERANCE_GAP)
                pieces.append(np.zeros(int(pause * TARGET_RATE)))
                body += len(utt) / TARGET_RATE + pause
            samples = np.concatenate(pieces)
            rec_id = f"{lang.code}_rec{rec_idx:03d}"
            path = pretrain_dir / f"{rec_id}.wav"
            write_wav(path, samples)
            recording_entries.append(
                ManifestEntry(
                    id=rec_id,
                    path=str(path.relative_to(root)),
                    lang=lang.code,
                    duration_sec=len(samples) / TARGET_RATE,
                    source="toy",
                    split="train",
                )
            )
            total += len(samples) / TARGET_RATE
            rec_idx += 1
        ledger["pretrain_seconds"][lang.code] = total

    write_manifest(recording_entries, root / "recordings.tsv")

    labeled_entries, transcripts = [], {}
    for lang in languages:
        rng = rng_for(seed, "synth-labeled", lang.code)
        counts = {"train": labeled_train, "valid": labeled_valid, "test": labeled_test}
        lang_total = 0.0
        for split, n in counts.items():
            for i in range(n):
                utt, text = _utterance(lang, rng)
                utt_id = f"{lang.code}_{split}{i:04d}"
                path = labeled_dir / f"{utt_id}.wav"
                write_wav(path, utt)
                labeled_entries.append(
                    ManifestEntry(
                        id=utt_id,
                        path=str(path.relative_to(root)),
                        lang=lang.code,
                        duration_sec=len(utt) / TARGET_RATE,
                        source="toy",
                        split=split,
                    )
                )
                transcripts[utt_id] = text
                lang_total += len(utt) / TARGET_RATE
        ledger["labeled_seconds"][lang.code] = lang_total
        ledger["labeled_counts"][lang.code] = dict(counts)

    write_manifest(labeled_entries, root / "labeled.tsv")
    write_transcripts(transcripts, root / "transcripts.tsv")
    (root / "ledger.json").write_text(
        json.dumps(ledger, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return ledger


def make_dialect_corpus(root, seed: int = 0, base=DEFAULT_LANGUAGES[0],
                        train_counts=(100, 25, 50), valid_count: int = 12,
                        test_count: int = 25) -> dict:
    """Three dialects of one toy language: shifted tone inventories with a
    deliberately scarce second dialect. Dialect codes land in the manifest
    language column so balancing and per-dialect reporting group on them."""
    root = Path(root)
    entries, transcripts = {}, {}
    manifest = []
    for (code, scale, noise), n_train in zip(DIALECTS, train_counts):
        dialect = ToyLanguage(
            code=code,
            tones=tuple(f * scale for f in base.tones),
            chars=base.chars,
            harmonic=base.harmonic,
        )
        rng = rng_for(seed, "synth-dialect", code)
        for split, n in (("train", n_train), ("valid", valid_count), ("test", test_count)):
            for i in range(n):
                utt, text = _utterance(dialect, rng)
                if noise:
                    utt = utt + noise * rng.standard_normal(len(utt))
                utt_id = f"{code}_{split}{i:04d}"
                path = root / "audio" / f"{utt_id}.wav"
                write_wav(path, utt)
                manifest.append(
                    ManifestEntry(
                        id=utt_id,
                        path=str(path.relative_to(root)),
                        lang=code,
                        duration_sec=len(utt) / TARGET_RATE,
                        source="toy-dialect",
                        split=split,
                    )
                )
                transcripts[utt_id] = text
    write_manifest(manifest, root / "labeled.tsv")
    write_transcripts(transcripts, root / "transcripts.tsv")
    entries["dialects"] = [d[0] for d in DIALECTS]
    return entries


def make_noisy_copy(store_root, entries, out_root, snr_db: float = 10.0, seed: int = 0):
    """Additive-Gaussian copies of the given segments at a fixed SNR:
    the synthetic domain shift for out-of-domain evaluation."""
    from ..corpus.audio import load_record

    out_root = Path(out_root)
    noisy = []
    for entry in entries:
        rec = load_record(store_root, entry)
        power = float(np.mean(rec.samples**2))
        noise_power = power / (10.0 ** (snr_db / 10.0))
        rng = rng_for(seed, "noise", entry.id)
        samples = rec.samples + np.sqrt(noise_power) * rng.standard_normal(len(rec.samples))
        samples = np.clip(samples, -1.0, 1.0)
        path = out_root / "audio" / f"{entry.id}.wav"
        write_wav(path, samples)
        noisy.append(
            ManifestEntry(
                id=entry.id,
                path=str(path.relative_to(out_root)),
                lang=entry.lang,
                duration_sec=len(samples) / TARGET_RATE,
                source=f"{entry.source}-noisy",
                split=entry.split,
            )
        )
    write_manifest(noisy, out_root / "labeled.tsv")
    return noisy
