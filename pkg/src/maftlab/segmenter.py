"""Recording segmentation and the duration / language-scarcity filters.

The detector is frame-energy thresholding with hangover smoothing:
deterministic, dependency-free, and adequate for desk corpora.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus.audio import AudioRecord, write_wav
from .corpus.manifest import ManifestEntry, compute_durations
from .errors import ConfigError
from . import kv

# Frames with RMS below this amplitude are never speech, regardless of the
# relative threshold; keeps all-silence recordings from matching themselves.
_ABS_SILENCE_RMS = 1e-5


@dataclass(frozen=True)
class Segment:
    parent_id: str
    start: float
    end: float
    language: str
    source: str

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class VadConfig:
    frame_ms: int = 30
    energy_threshold_db: float = -35.0
    hangover_frames: int = 0
    min_silence_ms: float = 300.0

    def validate(self):
        if self.frame_ms not in (10, 20, 30):
            raise ConfigError(f"frame_ms must be 10, 20 or 30, got {self.frame_ms}")
        if self.hangover_frames < 0:
            raise ConfigError("hangover_frames must be >= 0")
        return self

    @classmethod
    def from_file(cls, path) -> "VadConfig":
        raw = kv.load_kv(path)
        return cls(
            frame_ms=kv.get_int(raw, "frame_ms", 30),
            energy_threshold_db=kv.get_float(raw, "energy_threshold_db", -35.0),
            hangover_frames=kv.get_int(raw, "hangover_frames", 0),
            min_silence_ms=kv.get_float(raw, "min_silence_ms", 300.0),
        ).validate()


def _frame_activity(samples: np.ndarray, rate: int, cfg: VadConfig) -> np.ndarray:
    frame_len = int(rate * cfg.frame_ms / 1000)
    n_frames = len(samples) // frame_len
    if n_frames == 0:
        return np.zeros(0, dtype=bool)
    frames = samples[: n_frames * frame_len].reshape(n_frames, frame_len)
    frame_rms = np.sqrt(np.mean(frames**2, axis=1))
    total_rms = np.sqrt(np.mean(samples**2))
    rel_db = 20.0 * np.log10((frame_rms + 1e-12) / (total_rms + 1e-12))
    return (rel_db > cfg.energy_threshold_db) & (frame_rms > _ABS_SILENCE_RMS)


def vad_segment(rec: AudioRecord, cfg: VadConfig = None) -> list:
    """Split a normalized recording into speech segments.

    Active frames are those whose energy exceeds the threshold relative to
    the whole-recording RMS; hangover smoothing extends each active region,
    and gaps shorter than min_silence_ms never close a segment. All-silence
    input yields an empty list.
    """
    cfg = (cfg or VadConfig()).validate()
    active = _frame_activity(rec.samples, rec.sample_rate, cfg)
    if not active.any():
        return []

    if cfg.hangover_frames:
        extended = active.copy()
        for shift in range(1, cfg.hangover_frames + 1):
            extended[shift:] |= active[:-shift]
        active = extended

    frame_sec = cfg.frame_ms / 1000.0
    min_gap = max(1, int(round(cfg.min_silence_ms / cfg.frame_ms)))

    # Runs of active frames, then merge runs separated by short gaps.
    runs = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(active)))

    merged = [runs[0]]
    for run in runs[1:]:
        if run[0] - merged[-1][1] < min_gap:
            merged[-1] = (merged[-1][0], run[1])
        else:
            merged.append(run)

    duration = rec.duration
    return [
        Segment(
            parent_id=rec.id,
            start=round(a * frame_sec, 6),
            end=round(min(b * frame_sec, duration), 6),
            language=rec.language,
            source=rec.source,
        )
        for a, b in merged
    ]


def _duration_of(item) -> float:
    if hasattr(item, "duration_sec"):
        return item.duration_sec
    return item.duration


def apply_duration_filter(segments, min_dur: float = 1.0, max_dur: float = 30.0) -> list:
    """Keep items with min_dur <= duration <= max_dur (both ends inclusive)."""
    return [s for s in segments if min_dur <= _duration_of(s) <= max_dur]


def drop_scarce_languages(manifest, min_total: float = 1200.0) -> list:
    """Remove every entry of languages totalling strictly less than min_total seconds."""
    totals = compute_durations(manifest).by_language
    return [e for e in manifest if totals[e.lang] >= min_total]


def cut_segments(rec: AudioRecord, segments, out_dir, relative_to=None) -> list:
    """Write each segment as its own WAV; return the manifest entries."""
    out_dir = Path(out_dir)
    relative_to = Path(relative_to) if relative_to is not None else out_dir
    entries = []
    for idx, seg in enumerate(segments):
        a = int(round(seg.start * rec.sample_rate))
        b = int(round(seg.end * rec.sample_rate))
        clip = rec.samples[a:b]
        seg_id = f"{rec.id}_{idx:04d}"
        path = out_dir / f"{seg_id}.wav"
        write_wav(path, clip, rec.sample_rate)
        entries.append(
            ManifestEntry(
                id=seg_id,
                path=str(path.relative_to(relative_to)),
                lang=seg.language,
                duration_sec=len(clip) / rec.sample_rate,
                source=seg.source,
                split="train",
            )
        )
    return entries
