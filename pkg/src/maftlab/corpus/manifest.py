"""Manifests: tab-separated bookkeeping for every stored segment."""

from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import ConfigError

SPLITS = ("train", "valid", "test")

_HEADER = ["id", "path", "lang", "duration_sec", "source", "split"]


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    lang: str
    duration_sec: float
    source: str
    split: str = "train"

    def with_split(self, split: str) -> "ManifestEntry":
        return replace(self, split=split)


def base_id(entry_id: str) -> str:
    """Strip the `#<n>` repetition suffix added by upsampling."""
    return entry_id.split("#", 1)[0]


def format_entry(entry: ManifestEntry) -> str:
    return "\t".join(
        [
            entry.id,
            entry.path,
            entry.lang,
            f"{entry.duration_sec:.6f}",
            entry.source,
            entry.split,
        ]
    )


def write_manifest(entries, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(_HEADER)]
    lines.extend(format_entry(e) for e in entries)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> list:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0].split("\t") != _HEADER:
        raise ConfigError(f"{path}: missing or malformed manifest header")
    entries = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(_HEADER):
            raise ConfigError(f"{path}:{lineno}: expected {len(_HEADER)} columns")
        entry = ManifestEntry(
            id=cols[0],
            path=cols[1],
            lang=cols[2],
            duration_sec=float(cols[3]),
            source=cols[4],
            split=cols[5],
        )
        if entry.split not in SPLITS:
            raise ConfigError(f"{path}:{lineno}: bad split {entry.split!r}")
        if entry.id in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    return entries


@dataclass
class DurationTable:
    """Total seconds per language and per source."""

    by_language: dict
    by_source: dict

    def total(self) -> float:
        return sum(self.by_language.values())

    def seconds(self, lang: str) -> float:
        return self.by_language.get(lang, 0.0)


def compute_durations(manifest) -> DurationTable:
    by_language: dict = {}
    by_source: dict = {}
    for entry in manifest:
        by_language[entry.lang] = by_language.get(entry.lang, 0.0) + entry.duration_sec
        by_source[entry.source] = by_source.get(entry.source, 0.0) + entry.duration_sec
    return DurationTable(by_language=by_language, by_source=by_source)


def duration_csv_lines(table: DurationTable) -> list:
    """Per-language CSV rows (lang, total_hours) sorted by hours descending."""
    rows = sorted(table.by_language.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = ["lang,total_hours"]
    lines.extend(f"{lang},{seconds / 3600.0:.4f}" for lang, seconds in rows)
    return lines


def filter_languages(manifest, allowlist) -> list:
    """Keep exactly the entries whose language is in the allowlist."""
    if not allowlist:
        raise ConfigError("language allowlist must be non-empty")
    allowed = set(allowlist)
    return [entry for entry in manifest if entry.lang in allowed]
