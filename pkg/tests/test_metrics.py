import itertools
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maftlab.errors import DataError, EmptyReferenceError
from maftlab.metrics.classification import (
    confusion_analysis,
    confusion_matrix,
    macro_f1,
)
from maftlab.metrics.edits import edit_distance
from maftlab.metrics.rates import cer, wer


def oracle_distance(ref, hyp):
    """Top-down recursive alignment enumeration with shared subproblems;
    independent of the tabulated implementation and its backtrace."""
    ref = tuple(ref)
    hyp = tuple(hyp)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        sub = go(i + 1, j + 1) + (0 if ref[i] == hyp[j] else 1)
        dele = go(i + 1, j) + 1
        ins = go(i, j + 1) + 1
        return min(sub, dele, ins)

    return go(0, 0)


def enumerate_distance(ref, hyp):
    """Pure exponential enumeration of every edit script (tiny inputs only)."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    return min(
        enumerate_distance(ref[1:], hyp[1:]) + (0 if ref[0] == hyp[0] else 1),
        enumerate_distance(ref[1:], hyp) + 1,
        enumerate_distance(ref, hyp[1:]) + 1,
    )


def two_row_distance(a, b):
    """Second independent check: classic two-row iteration."""
    n, m = len(a), len(b)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j - 1] + cost, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[m]


def all_strings(alphabet, max_len):
    out = [()]
    for n in range(1, max_len + 1):
        out.extend(itertools.product(alphabet, repeat=n))
    return out


class TestEditDistance:
    def test_identical(self):
        counts = edit_distance("the cat sat".split(), "the cat sat".split())
        assert tuple(counts) == (0, 0, 0)

    def test_single_deletion(self):
        counts = edit_distance("the cat sat".split(), "the cat".split())
        assert tuple(counts) == (0, 0, 1)
        assert wer("the cat sat", "the cat") == pytest.approx(1 / 3)

    def test_exhaustive_short_pairs_match_oracle(self):
        strings = all_strings("ab", 6)
        for ref in strings:
            for hyp in strings:
                assert edit_distance(ref, hyp).total == oracle_distance(ref, hyp)

    def test_tiny_pairs_match_pure_enumeration(self):
        strings = all_strings("ab", 3)
        for ref in strings:
            for hyp in strings:
                assert edit_distance(ref, hyp).total == enumerate_distance(ref, hyp)

    def test_random_long_pairs_match_dp_crosscheck(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            n, m = rng.integers(0, 30), rng.integers(0, 30)
            ref = rng.integers(0, 5, size=n).tolist()
            hyp = rng.integers(0, 5, size=m).tolist()
            assert edit_distance(ref, hyp).total == two_row_distance(ref, hyp)

    def test_count_identities(self):
        rng = np.random.default_rng(32)
        for _ in range(200):
            ref = rng.integers(0, 4, size=rng.integers(0, 12)).tolist()
            hyp = rng.integers(0, 4, size=rng.integers(0, 12)).tolist()
            c = edit_distance(ref, hyp)
            assert len(hyp) == len(ref) + c.insertions - c.deletions
            assert c.total == oracle_distance(ref, hyp)

    def test_backtrace_prefers_substitution(self):
        # "ab" -> "cd" could be 2 subs or ins+del mixes; tie rule picks subs
        c = edit_distance(list("ab"), list("cd"))
        assert (c.substitutions, c.insertions, c.deletions) == (2, 0, 0)

    def test_backtrace_prefers_deletion_over_insertion(self):
        # equal-cost del/ins alternatives resolve to deletion first
        c = edit_distance(list("ab"), list("ba"))
        assert c.total == 2
        assert c.substitutions == 2  # sub > del > ins

    def test_metric_properties(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            a = rng.integers(0, 3, size=rng.integers(0, 8)).tolist()
            b = rng.integers(0, 3, size=rng.integers(0, 8)).tolist()
            c = rng.integers(0, 3, size=rng.integers(0, 8)).tolist()
            dab = edit_distance(a, b).total
            dba = edit_distance(b, a).total
            dac = edit_distance(a, c).total
            dcb = edit_distance(c, b).total
            assert dab == dba
            assert dab <= dac + dcb


class TestRates:
    def test_cer_simple(self):
        assert cer("abc", "abd") == pytest.approx(1 / 3)

    def test_identical_zero(self):
        assert wer("gbogbo aye", "gbogbo aye") == 0.0
        assert cer("gbogbo aye", "gbogbo aye") == 0.0

    def test_wer_can_exceed_one(self):
        # 2 subs + 1 insertion over a 2-token reference
        assert wer("a b", "x y z") == pytest.approx(1.5)

    def test_cer_counts_spaces(self):
        assert cer("a b", "ab") == pytest.approx(1 / 3)

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            wer("", "something")
        with pytest.raises(EmptyReferenceError):
            cer("", "x")

    @given(st.text(alphabet="abc éọ", max_size=20).filter(lambda s: s.strip()))
    @settings(max_examples=60, deadline=None)
    def test_self_rates_zero(self, text):
        assert wer(text, text) == 0.0
        assert cer(text, text) == 0.0


class TestMacroF1:
    LANGS = ["aaa", "bbb", "ccc"]

    def test_perfect(self):
        labels = ["aaa", "bbb", "ccc"] * 4
        report = macro_f1(labels, labels, self.LANGS, african_subset=self.LANGS)
        assert report.avg_star("f1") == 1.0
        assert report.avg("f1") == 1.0

    def test_never_predicted_language_zero(self):
        labels = ["aaa", "bbb", "ccc", "ccc"]
        preds = ["aaa", "bbb", "aaa", "bbb"]
        report = macro_f1(labels, preds, self.LANGS)
        assert report.per_language["ccc"]["f1"] == 0.0

    def test_hand_computed_three_language_case(self):
        # confusion: aaa: 8 correct, 2->bbb; bbb: 9 correct, 1->ccc;
        # ccc: 7 correct, 3->aaa
        labels = ["aaa"] * 10 + ["bbb"] * 10 + ["ccc"] * 10
        preds = (["aaa"] * 8 + ["bbb"] * 2 + ["bbb"] * 9 + ["ccc"] * 1
                 + ["ccc"] * 7 + ["aaa"] * 3)
        report = macro_f1(labels, preds, self.LANGS)
        # aaa: P=8/11, R=8/10 -> F1 = 2*8/(11+10) = 16/21
        # bbb: P=9/11, R=9/10 -> F1 = 18/21
        # ccc: P=7/8,  R=7/10 -> F1 = 14/18
        assert report.per_language["aaa"]["f1"] == pytest.approx(16 / 21, abs=1e-9)
        assert report.per_language["bbb"]["f1"] == pytest.approx(18 / 21, abs=1e-9)
        assert report.per_language["ccc"]["f1"] == pytest.approx(14 / 18, abs=1e-9)
        expect = (16 / 21 + 18 / 21 + 14 / 18) / 3
        assert report.avg_star("f1") == pytest.approx(expect, abs=1e-9)

    def test_avg_equals_avg_star_when_subset_is_all(self):
        labels = ["aaa", "bbb", "ccc", "aaa"]
        preds = ["aaa", "ccc", "ccc", "bbb"]
        report = macro_f1(labels, preds, self.LANGS, african_subset=self.LANGS)
        assert report.avg("f1") == pytest.approx(report.avg_star("f1"))

    def test_avg_subset_convention(self):
        labels = ["aaa", "bbb", "ccc"]
        preds = ["aaa", "bbb", "ccc"]
        report = macro_f1(labels, preds, self.LANGS, african_subset=["aaa", "bbb"])
        assert report.avg("f1") == 1.0
        # degrade ccc only: avg unchanged, avg_star drops
        report2 = macro_f1(labels, ["aaa", "bbb", "aaa"], self.LANGS,
                           african_subset=["aaa", "bbb"])
        assert report2.avg("f1") < 1.0  # aaa precision suffers
        assert report2.per_language["ccc"]["f1"] == 0.0

    def test_unseen_label_rejected(self):
        with pytest.raises(DataError):
            macro_f1(["aaa"], ["zzz"], self.LANGS)

    def test_report_jsonl_shape(self, tmp_path):
        labels = ["aaa", "bbb"]
        report = macro_f1(labels, labels, ["aaa", "bbb"], african_subset=["aaa"])
        report.write(tmp_path / "r.jsonl")
        import json

        rows = [json.loads(line) for line in
                (tmp_path / "r.jsonl").read_text().splitlines()]
        names = [r["lang"] for r in rows]
        assert names == ["aaa", "bbb", "avg", "avg*"]


class TestConfusion:
    def test_diagonal_no_pairs(self):
        labels = ["aaa", "bbb"] * 5
        matrix = confusion_matrix(labels, labels, ["aaa", "bbb"])
        assert confusion_analysis(matrix) == []

    def test_forty_percent_rate(self):
        labels = ["zul"] * 100 + ["xho"] * 100
        preds = ["xho"] * 40 + ["zul"] * 60 + ["xho"] * 100
        matrix = confusion_matrix(labels, preds, ["zul", "xho"])
        assert matrix.rate("zul", "xho") == pytest.approx(0.40)
        assert matrix.rate("xho", "zul") == 0.0

    def test_asymmetric_pair_flagged(self):
        labels = ["zul"] * 10 + ["xho"] * 10
        preds = ["xho"] * 4 + ["zul"] * 6 + ["xho"] * 10
        pairs = confusion_analysis(
            confusion_matrix(labels, preds, ["zul", "xho"]), threshold=0.1
        )
        assert pairs[0]["from"] == "zul" and pairs[0]["to"] == "xho"
        assert pairs[0]["rate"] == pytest.approx(0.4)
        assert pairs[0]["reverse_rate"] == 0.0

    def test_zero_row_skipped(self):
        labels = ["aaa"] * 5
        preds = ["bbb"] * 5
        matrix = confusion_matrix(labels, preds, ["aaa", "bbb", "ccc"])
        pairs = confusion_analysis(matrix, threshold=0.1)
        assert all(p["from"] != "ccc" for p in pairs)
        assert np.isnan(matrix.rate("ccc", "aaa"))

    def test_row_sums_invariant_under_prediction_relabeling(self):
        rng = np.random.default_rng(40)
        langs = ["aaa", "bbb", "ccc"]
        labels = rng.choice(langs, size=60).tolist()
        preds1 = rng.choice(langs, size=60).tolist()
        preds2 = [{"aaa": "bbb", "bbb": "ccc", "ccc": "aaa"}[p] for p in preds1]
        m1 = confusion_matrix(labels, preds1, langs)
        m2 = confusion_matrix(labels, preds2, langs)
        assert np.array_equal(m1.counts.sum(axis=1), m2.counts.sum(axis=1))

    def test_csv_shape(self):
        labels = ["aaa", "bbb"]
        matrix = confusion_matrix(labels, labels, ["aaa", "bbb"])
        lines = matrix.to_csv().splitlines()
        assert lines[0] == "true\\pred,aaa,bbb"
        assert len(lines) == 3
