"""Tiny key=value config file format.

One `key = value` pair per line, `#` starts a comment, blank lines ignored.
Values stay strings; callers coerce via the typed getters. Used for VAD
configs, training run configs, fine-tune configs, and experiment recipes.
"""

from pathlib import Path

from .errors import ConfigError


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_kv(path) -> dict:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def dump_kv(mapping: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in mapping.items())


def get_str(kv: dict, key: str, default=None) -> str:
    if key in kv and kv[key] != "":
        return kv[key]
    if default is None:
        raise ConfigError(f"missing required config key {key!r}")
    return default


def get_int(kv: dict, key: str, default=None) -> int:
    raw = kv.get(key, "")
    if raw == "":
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {raw!r} is not an integer") from exc


def get_float(kv: dict, key: str, default=None) -> float:
    raw = kv.get(key, "")
    if raw == "":
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {raw!r} is not a number") from exc


def get_list(kv: dict, key: str, default=None, sep=",") -> list:
    raw = kv.get(key, "")
    if raw == "":
        return list(default) if default is not None else []
    return [item.strip() for item in raw.split(sep) if item.strip()]
