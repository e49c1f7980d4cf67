"""Validation carve-out and temperature-balanced corpus materialization.

Language shares are rebalanced by exponentiating the duration-proportional
probabilities with a temperature alpha (default 0.8) and renormalizing;
alpha < 1 flattens the distribution toward low-resource languages. The
balanced mixture is materialized as an explicit manifest (repetition
counts), so training consumes a reproducible, inspectable file instead of
sampling on the fly.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus.manifest import ManifestEntry, compute_durations
from .errors import ConfigError, DegenerateDistributionError, MissingLanguageError
from .seeding import rng_for

DEFAULT_ALPHA = 0.8

# Validation quotas: 10 min for languages under 2 h of data, 30 min for the
# rest; a language never gives more than half of itself to validation.
SMALL_LANG_THRESHOLD = 7200.0
SMALL_QUOTA = 600.0
BIG_QUOTA = 1800.0


@dataclass
class SamplingPlan:
    alpha: float
    durations: dict
    p: dict
    q: dict
    excluded: set
    target_total: float = None
    repetition: dict = field(default_factory=dict)

    def validate(self):
        if self.p:
            if abs(sum(self.p.values()) - 1.0) > 1e-12:
                raise ConfigError("plan probabilities p do not sum to 1")
            if abs(sum(self.q.values()) - 1.0) > 1e-12:
                raise ConfigError("plan probabilities q do not sum to 1")
        for lang, d in self.durations.items():
            if lang not in self.excluded and d > 0 and self.q.get(lang, 0.0) <= 0:
                raise ConfigError(f"language {lang} has data but zero sampling weight")
        return self


def compute_sampling_probs(durations, alpha: float = DEFAULT_ALPHA, excluded=()) -> SamplingPlan:
    """Temperature-balanced sampling probabilities over included languages.

    p_i = d_i / sum_j d_j and q_i = p_i**alpha / sum_j p_j**alpha, computed
    over the languages not in `excluded`. Exact within 1e-12 relative error
    of arbitrary-precision evaluation.
    """
    if alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    by_lang = durations.by_language if hasattr(durations, "by_language") else dict(durations)
    excluded = set(excluded)
    included = {lang: d for lang, d in by_lang.items() if lang not in excluded}
    total = sum(included.values())
    if not included or total <= 0:
        raise DegenerateDistributionError("no included language has nonzero duration")

    langs = sorted(included)
    d = np.array([included[lang] for lang in langs], dtype=np.float64)
    p = d / d.sum()
    w = p**alpha
    q = w / w.sum()
    plan = SamplingPlan(
        alpha=alpha,
        durations={lang: by_lang[lang] for lang in sorted(by_lang)},
        p=dict(zip(langs, p.tolist())),
        q=dict(zip(langs, q.tolist())),
        excluded=excluded,
        repetition={lang: qi / pi if pi > 0 else 0.0 for lang, pi, qi in zip(langs, p, q)},
    )
    return plan.validate()


def carve_validation(
    manifest,
    seed: int = 0,
    small_quota: float = SMALL_QUOTA,
    big_quota: float = BIG_QUOTA,
    small_threshold: float = SMALL_LANG_THRESHOLD,
):
    """Split a train-only manifest into (train, valid) per language.

    Per language: seed-shuffle the entries and move the smallest prefix
    whose total duration reaches the quota (10 min under 2 h of data, else
    30 min) into validation, then trim the carve so validation never holds
    more than half of the language (the quota rule is undefined for
    languages barely above it).
    """
    for entry in manifest:
        if entry.split != "train":
            raise ConfigError(f"carve_validation expects split=train entries, got {entry.split!r}")

    by_lang: dict = {}
    for entry in manifest:
        by_lang.setdefault(entry.lang, []).append(entry)

    train, valid = [], []
    for lang in sorted(by_lang):
        entries = list(by_lang[lang])
        total = sum(e.duration_sec for e in entries)
        quota = small_quota if total < small_threshold else big_quota
        order = rng_for(seed, "carve", lang).permutation(len(entries))
        shuffled = [entries[i] for i in order]

        carve, cum = [], 0.0
        for entry in shuffled:
            if cum >= quota:
                break
            carve.append(entry)
            cum += entry.duration_sec
        while carve and cum > total / 2.0:
            cum -= carve[-1].duration_sec
            carve.pop()

        carved_ids = {e.id for e in carve}
        valid.extend(e.with_split("valid") for e in carve)
        train.extend(e for e in entries if e.id not in carved_ids)
    return train, valid


def _fill_language(entries, target: float, rng) -> list:
    """First-fit cyclic repetition of seed-shuffled segments up to `target`.

    Scans the shuffled list cyclically, adding every segment that still
    fits; stops once a whole cycle adds nothing, which leaves the realized
    total within one (shortest) segment of the target.
    """
    order = rng.permutation(len(entries))
    shuffled = [entries[i] for i in order]
    picked, cum = [], 0.0
    while True:
        added = False
        for entry in shuffled:
            if cum + entry.duration_sec <= target:
                picked.append(entry)
                cum += entry.duration_sec
                added = True
        if not added:
            break
    if not picked:
        picked.append(shuffled[0])
    return picked


def build_upsampled_manifest(train, plan: SamplingPlan, target_total: float, seed: int = 0):
    """Materialize the temperature-balanced training manifest.

    Included language i receives q_i * target_total of audio (within one
    segment) by repeating its own seed-shuffled segments; excluded
    languages keep their natural duration, each segment appearing exactly
    once. Returns (entries, realized_plan); entry ids of repeated segments
    carry a `#<n>` suffix.
    """
    by_lang: dict = {}
    for entry in train:
        by_lang.setdefault(entry.lang, []).append(entry)

    included = [lang for lang in plan.q if plan.q[lang] > 0]
    missing = [lang for lang in included if not by_lang.get(lang)]
    if missing:
        raise MissingLanguageError(f"plan languages with no surviving segments: {missing}")
    included_total = sum(e.duration_sec for lang in included for e in by_lang[lang])
    if target_total < included_total:
        raise ConfigError(
            f"target_total {target_total:.1f}s is below the included corpus "
            f"duration {included_total:.1f}s; upsampling cannot shrink data"
        )

    picked = []
    realized = {}
    for lang in sorted(by_lang):
        entries = by_lang[lang]
        if lang in plan.excluded or lang not in plan.q:
            chosen = list(entries)
        else:
            target = plan.q[lang] * target_total
            chosen = _fill_language(entries, target, rng_for(seed, "upsample", lang))
        realized[lang] = sum(e.duration_sec for e in chosen)
        counts: dict = {}
        for entry in chosen:
            n = counts.get(entry.id, 0)
            counts[entry.id] = n + 1
            picked.append(entry if n == 0 else replace(entry, id=f"{entry.id}#{n}"))

    order = rng_for(seed, "upsample", "shuffle").permutation(len(picked))
    out = [picked[i] for i in order]

    realized_plan = replace(
        plan,
        target_total=target_total,
        repetition={
            lang: realized[lang] / sum(e.duration_sec for e in by_lang[lang])
            for lang in sorted(by_lang)
        },
    )
    return out, realized_plan


_PLAN_HEADER = ["lang", "d_sec", "p", "q", "repetition_factor"]


def write_plan(plan: SamplingPlan, path):
    """Plan TSV: one row per language, 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# alpha={plan.alpha:.12g}",
        f"# excluded={','.join(sorted(plan.excluded))}",
        f"# target_total={'' if plan.target_total is None else format(plan.target_total, '.12g')}",
        "\t".join(_PLAN_HEADER),
    ]
    for lang in sorted(plan.durations):
        d = plan.durations[lang]
        p = plan.p.get(lang)
        q = plan.q.get(lang)
        r = plan.repetition.get(lang)
        lines.append(
            "\t".join(
                [
                    lang,
                    f"{d:.12g}",
                    "" if p is None else f"{p:.12g}",
                    "" if q is None else f"{q:.12g}",
                    "" if r is None else f"{r:.12g}",
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_plan(path) -> SamplingPlan:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    rows = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line:
            rows.append(line.split("\t"))
    if not rows or rows[0] != _PLAN_HEADER:
        raise ConfigError(f"{path}: missing or malformed plan header")
    durations, p, q, repetition = {}, {}, {}, {}
    for cols in rows[1:]:
        lang = cols[0]
        durations[lang] = float(cols[1])
        if cols[2]:
            p[lang] = float(cols[2])
        if cols[3]:
            q[lang] = float(cols[3])
        if cols[4]:
            repetition[lang] = float(cols[4])
    target = float(meta["target_total"]) if meta.get("target_total") else None
    plan = SamplingPlan(
        alpha=float(meta.get("alpha", DEFAULT_ALPHA)),
        durations=durations,
        p=p,
        q=q,
        excluded={s for s in meta.get("excluded", "").split(",") if s},
        target_total=target,
        repetition=repetition,
    )
    return plan.validate()


def plan_from_manifest(manifest, alpha: float = DEFAULT_ALPHA, excluded=()) -> SamplingPlan:
    return compute_sampling_probs(compute_durations(manifest), alpha=alpha, excluded=excluded)
