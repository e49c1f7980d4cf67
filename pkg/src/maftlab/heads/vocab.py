"""Character vocabulary with reserved blank/unknown symbols.

Text is canonically composed (NFC), lowercased, and whitespace-squeezed
before any counting or encoding; diacritics are preserved, so combining
marks that have no precomposed form stay as their own symbols.
"""

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError, VocabOverflowError

BLANK = "<blank>"
UNK = "<unk>"


def normalize_text(text: str) -> str:
    composed = unicodedata.normalize("NFC", text)
    return " ".join(composed.lower().split())


@dataclass
class CharVocab:
    symbols: list  # index 0 = blank, 1 = unk, then characters, then padding

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def blank_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise DataError("vocabulary symbols must be unique")
        self._index = {sym: i for i, sym in enumerate(self.symbols)}

    def encode(self, text: str, strict: bool = True) -> list:
        text = normalize_text(text)
        missing = sorted({c for c in text if c not in self._index})
        if missing and strict:
            raise DataError(
                f"transcript contains characters outside the vocabulary: "
                f"{' '.join(repr(c) for c in missing)}"
            )
        return [self._index.get(c, self.unk_id) for c in text]

    def decode_ids(self, ids) -> str:
        """Control symbols (blank, unk, unused padding) decode to nothing;
        real characters are single codepoints, so multi-char symbols are
        always control symbols."""
        return "".join(
            self.symbols[i]
            for i in ids
            if 0 <= i < self.size and len(self.symbols[i]) == 1
        )

    def to_file(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps({"symbols": self.symbols}, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_file(cls, path) -> "CharVocab":
        return cls(symbols=json.loads(Path(path).read_text(encoding="utf-8"))["symbols"])


def build_char_vocab(transcripts, size: int, min_count: int = 1) -> CharVocab:
    """Deterministic fixed-size character vocabulary.

    Characters occurring at least min_count times are admitted in priority
    order (frequency descending, then codepoint ascending). If they do not
    all fit beside the two reserved symbols, VocabOverflowError lists the
    casualties. Unused tail slots are filled with placeholder symbols so
    the vocabulary size always matches the configured size.
    """
    if not transcripts:
        raise DataError("cannot build a vocabulary from zero transcripts")
    counts = Counter()
    for text in transcripts:
        counts.update(normalize_text(text))
    eligible = sorted(
        (c for c, n in counts.items() if n >= min_count),
        key=lambda c: (-counts[c], c),
    )
    budget = size - 2
    if len(eligible) > budget:
        raise VocabOverflowError(casualties=eligible[budget:], size=size)
    symbols = [BLANK, UNK] + eligible
    symbols += [f"<unused_{i}>" for i in range(size - len(symbols))]
    return CharVocab(symbols=symbols)
