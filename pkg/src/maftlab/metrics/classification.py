"""Macro F1 with the dual averaging convention, confusion analysis, reports.

Reports carry two means: `avg_star` over every evaluated language and
`avg` over the African subset only (the four widely spoken non-African
languages are excluded from the latter).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError


@dataclass
class MetricReport:
    task: str
    per_language: dict                 # lang -> {metric: value}
    african_subset: set
    metrics: list
    n_seeds: int = 1

    def avg_star(self, metric: str) -> float:
        values = [v[metric] for v in self.per_language.values() if metric in v]
        return float(np.mean(values)) if values else float("nan")

    def avg(self, metric: str) -> float:
        values = [
            v[metric]
            for lang, v in self.per_language.items()
            if lang in self.african_subset and metric in v
        ]
        return float(np.mean(values)) if values else float("nan")

    def to_jsonl(self) -> str:
        lines = []
        for lang in sorted(self.per_language):
            row = {"lang": lang}
            row.update({m: self.per_language[lang][m]
                        for m in self.metrics if m in self.per_language[lang]})
            lines.append(json.dumps(row, sort_keys=True))
        for name, fn in (("avg", self.avg), ("avg*", self.avg_star)):
            row = {"lang": name}
            row.update({m: fn(m) for m in self.metrics})
            lines.append(json.dumps(row, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")

    def table(self) -> str:
        """Human-readable fixed-width summary."""
        header = ["lang"] + list(self.metrics)
        rows = [header]
        for lang in sorted(self.per_language):
            rows.append(
                [lang]
                + [
                    f"{self.per_language[lang][m]:.4f}" if m in self.per_language[lang] else "-"
                    for m in self.metrics
                ]
            )
        rows.append(["avg"] + [f"{self.avg(m):.4f}" for m in self.metrics])
        rows.append(["avg*"] + [f"{self.avg_star(m):.4f}" for m in self.metrics])
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows
        )


def macro_f1(labels, predictions, language_set, african_subset=()) -> MetricReport:
    """Per-language one-vs-rest F1 plus the avg / avg* means.

    Degenerate precision or recall (0/0) counts as 0, so a language that is
    never predicted scores F1 = 0. Labels or predictions outside the
    configured language set raise DataError.
    """
    language_set = sorted(set(language_set))
    known = set(language_set)
    labels = list(labels)
    predictions = list(predictions)
    if len(labels) != len(predictions):
        raise DataError("labels and predictions differ in length")
    for value in labels + predictions:
        if value not in known:
            raise DataError(f"label {value!r} outside the configured language set")

    per_language = {}
    for lang in language_set:
        tp = sum(1 for t, p in zip(labels, predictions) if t == lang and p == lang)
        fp = sum(1 for t, p in zip(labels, predictions) if t != lang and p == lang)
        fn = sum(1 for t, p in zip(labels, predictions) if t == lang and p != lang)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_language[lang] = {"f1": f1}
    return MetricReport(
        task="slid",
        per_language=per_language,
        african_subset=set(african_subset),
        metrics=["f1"],
    )


@dataclass
class ConfusionMatrix:
    languages: list                    # row/column order
    counts: np.ndarray = field(repr=False)  # L x L, rows = true language

    def rate(self, true_lang: str, predicted_lang: str) -> float:
        i = self.languages.index(true_lang)
        j = self.languages.index(predicted_lang)
        row = self.counts[i].sum()
        if row == 0:
            return float("nan")
        return float(self.counts[i, j] / row)

    def to_csv(self) -> str:
        lines = ["true\\pred," + ",".join(self.languages)]
        for i, lang in enumerate(self.languages):
            lines.append(lang + "," + ",".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"


def confusion_matrix(labels, predictions, language_set) -> ConfusionMatrix:
    languages = sorted(set(language_set))
    index = {lang: i for i, lang in enumerate(languages)}
    counts = np.zeros((len(languages), len(languages)), dtype=np.int64)
    for t, p in zip(labels, predictions):
        if t not in index or p not in index:
            raise DataError(f"label {t!r}/{p!r} outside the configured language set")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(languages=languages, counts=counts)


def confusion_analysis(matrix: ConfusionMatrix, threshold: float = 0.1, top_n: int = 10) -> list:
    """Directional confusion pairs with asymmetric rates.

    rate(A -> B) is count(A, B) / rowsum(A). Pairs where the forward rate
    exceeds the reverse by more than `threshold` are flagged, strongest gap
    first; rows with no samples have undefined rates and are skipped.
    """
    langs = matrix.languages
    row_sums = matrix.counts.sum(axis=1)
    pairs = []
    for i, a in enumerate(langs):
        if row_sums[i] == 0:
            continue
        for j, b in enumerate(langs):
            if i == j:
                continue
            forward = matrix.counts[i, j] / row_sums[i]
            reverse = matrix.counts[j, i] / row_sums[j] if row_sums[j] else 0.0
            gap = forward - reverse
            if gap > threshold:
                pairs.append(
                    {
                        "from": a,
                        "to": b,
                        "rate": float(forward),
                        "reverse_rate": float(reverse),
                        "gap": float(gap),
                    }
                )
    pairs.sort(key=lambda d: (-d["gap"], d["from"], d["to"]))
    return pairs[:top_n]
