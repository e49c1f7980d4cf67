"""Frame-aligned discrete target sequences and their on-disk format."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError


@dataclass
class TargetSequence:
    segment_id: str
    labels: np.ndarray  # length T, int32 in [0, k)

    def __len__(self):
        return len(self.labels)


def write_targets(sequences, path):
    """One line per segment: `segment_id<TAB>space-separated labels`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(seq.segment_id)
            fh.write("\t")
            fh.write(" ".join(str(int(v)) for v in seq.labels))
            fh.write("\n")


def read_targets(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        seg_id, _, labels = line.partition("\t")
        if not labels:
            raise ConfigError(f"{path}:{lineno}: malformed target line")
        out[seg_id] = np.array([int(v) for v in labels.split()], dtype=np.int32)
    return out
