"""Deterministic seed derivation.

All randomness in the pipeline flows from one global seed. Each stage asks
for a named substream, so stages can be re-run independently and still
reproduce byte-identical outputs.
"""

import hashlib

import numpy as np


def derive_seed(base_seed: int, *names) -> int:
    """Derive a 64-bit seed for the substream identified by `names`.

    Stable across platforms and Python versions (BLAKE2, not hash()).
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode("utf-8"))
    for name in names:
        h.update(b"\x00")
        h.update(str(name).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def rng_for(base_seed: int, *names) -> np.random.Generator:
    """numpy Generator for a named substream."""
    return np.random.default_rng(derive_seed(base_seed, *names))
