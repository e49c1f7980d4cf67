"""Levenshtein alignment with deterministic substitution/insertion/deletion
counts. Unit costs; backtrace ties prefer substitution, then deletion, then
insertion, so the decomposition is reproducible even when several minimal
alignments exist."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EditCounts:
    substitutions: int
    insertions: int
    deletions: int

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def __iter__(self):
        return iter((self.substitutions, self.insertions, self.deletions))


def edit_distance(ref, hyp) -> EditCounts:
    """Minimal-cost alignment counts between two token sequences."""
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    dp = np.zeros((n + 1, m + 1), dtype=np.int64)
    dp[:, 0] = np.arange(n + 1)
    dp[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            dp[i, j] = min(dp[i - 1, j - 1] + cost, dp[i - 1, j] + 1, dp[i, j - 1] + 1)

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dp[i, j] == dp[i - 1, j - 1] + cost:
                subs += cost
                i -= 1
                j -= 1
                continue
        if i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            dels += 1
            i -= 1
            continue
        ins += 1
        j -= 1
    return EditCounts(substitutions=subs, insertions=ins, deletions=dels)
