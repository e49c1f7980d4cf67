"""Per-language balancing rules for supervised fine-tuning data."""

from pathlib import Path

from ..seeding import rng_for


def cap_slid_data(entries, cap: int = 1030, seed: int = 0) -> list:
    """Cap every language at `cap` utterances; larger languages are
    seed-sampled down, smaller ones pass through untouched. Output order
    follows the input."""
    by_lang: dict = {}
    for i, entry in enumerate(entries):
        by_lang.setdefault(entry.lang, []).append(i)
    keep = set()
    for lang in sorted(by_lang):
        idx = by_lang[lang]
        if len(idx) <= cap:
            keep.update(idx)
        else:
            rng = rng_for(seed, "slid-cap", lang)
            chosen = rng.choice(len(idx), size=cap, replace=False)
            keep.update(idx[j] for j in chosen)
    return [entries[i] for i in sorted(keep)]


def sample_asr_hours(entries, hours: float = 3.0, seed: int = 0) -> list:
    """Duration-greedy per-language sample totalling at most `hours`;
    languages under the budget contribute everything. The low-resource
    studies reuse this with 10- and 30-minute budgets."""
    budget = hours * 3600.0
    by_lang: dict = {}
    for entry in entries:
        by_lang.setdefault(entry.lang, []).append(entry)
    picked = []
    for lang in sorted(by_lang):
        pool = by_lang[lang]
        order = rng_for(seed, "asr-hours", lang).permutation(len(pool))
        cum = 0.0
        for i in order:
            if cum + pool[i].duration_sec <= budget:
                picked.append(pool[i])
                cum += pool[i].duration_sec
    return picked


def read_transcripts(path) -> dict:
    """TSV of `utterance_id<TAB>text`, one line per utterance."""
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        utt_id, _, text = line.partition("\t")
        out[utt_id] = text
    return out


def write_transcripts(transcripts: dict, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{utt_id}\t{text}" for utt_id, text in transcripts.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
