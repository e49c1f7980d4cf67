"""Normalized audio store: ingestion, manifests, duration bookkeeping."""

from .audio import AudioRecord, ingest_audio, load_record, read_wav, write_wav
from .manifest import (
    DurationTable,
    ManifestEntry,
    compute_durations,
    duration_csv_lines,
    filter_languages,
    read_manifest,
    write_manifest,
)

__all__ = [
    "AudioRecord",
    "ingest_audio",
    "load_record",
    "read_wav",
    "write_wav",
    "ManifestEntry",
    "DurationTable",
    "compute_durations",
    "duration_csv_lines",
    "filter_languages",
    "read_manifest",
    "write_manifest",
]
