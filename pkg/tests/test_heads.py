import numpy as np
import pytest
import torch

from helpers import finite_diff_errors
from maftlab.corpus.manifest import ManifestEntry
from maftlab.errors import DataError, VocabOverflowError
from maftlab.heads.asr import AsrHead, collapse_ctc, collapse_repeats, decode_ctc_greedy
from maftlab.heads.data import cap_slid_data, read_transcripts, sample_asr_hours, write_transcripts
from maftlab.heads.pooling import SlidHead, attentive_pool
from maftlab.heads.vocab import CharVocab, build_char_vocab, normalize_text


def entry(i, lang, dur=1.0):
    return ManifestEntry(id=f"{lang}_{i}", path=f"{lang}_{i}.wav", lang=lang,
                         duration_sec=dur, source="toy", split="train")


class TestAttentivePool:
    def test_uniform_scores_give_mean(self):
        reps = torch.tensor([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], dtype=torch.float64)
        out = attentive_pool(reps, torch.zeros(3, dtype=torch.float64))
        assert torch.allclose(out, reps.mean(dim=0))

    def test_saturated_score_selects_frame(self):
        reps = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        out = attentive_pool(reps, torch.tensor([50.0, 0.0], dtype=torch.float64))
        assert torch.allclose(out, reps[0], atol=1e-6)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(8)
        reps = rng.normal(size=(5, 4))
        scores = rng.normal(size=5)
        out = attentive_pool(torch.tensor(reps), torch.tensor(scores)).numpy()
        import math

        exps = [math.exp(s) for s in scores]
        z = sum(exps)
        expect = sum((e / z) * reps[i] for i, e in enumerate(exps))
        assert np.max(np.abs(out - expect)) < 1e-6

    def test_output_in_convex_hull(self):
        rng = np.random.default_rng(9)
        reps = rng.normal(size=(10, 3))
        scores = rng.normal(size=10)
        out = attentive_pool(torch.tensor(reps), torch.tensor(scores)).numpy()
        assert np.all(out >= reps.min(axis=0) - 1e-12)
        assert np.all(out <= reps.max(axis=0) + 1e-12)

    def test_head_masks_pad_frames(self):
        torch.manual_seed(0)
        head = SlidHead(4, 3, hidden_dim=6)
        reps = torch.randn(1, 5, 4)
        mask = torch.tensor([[True, True, True, False, False]])
        base = head(reps[:, :3], frame_mask=torch.ones(1, 3, dtype=torch.bool))
        padded = head(reps, frame_mask=mask)
        assert torch.allclose(base, padded, atol=1e-6)


class TestDataBalancing:
    def test_cap_exact(self):
        entries = [entry(i, "big") for i in range(2000)]
        out = cap_slid_data(entries, cap=1030, seed=0)
        assert len(out) == 1030

    def test_under_cap_untouched(self):
        entries = [entry(i, "sml") for i in range(800)]
        assert cap_slid_data(entries, cap=1030, seed=0) == entries

    def test_cap_deterministic_and_subset(self):
        entries = [entry(i, "big") for i in range(50)]
        a = cap_slid_data(entries, cap=20, seed=3)
        b = cap_slid_data(entries, cap=20, seed=3)
        assert a == b
        assert set(e.id for e in a) <= set(e.id for e in entries)

    def test_asr_hours_budget(self):
        entries = [entry(i, "big", dur=36.0) for i in range(1000)]  # 10 h
        out = sample_asr_hours(entries, hours=3.0, seed=1)
        total = sum(e.duration_sec for e in out)
        assert total <= 3.0 * 3600.0
        assert total > 3.0 * 3600.0 - 36.0

    def test_asr_hours_under_budget_takes_all(self):
        entries = [entry(i, "sml", dur=30.0) for i in range(100)]  # 50 min
        out = sample_asr_hours(entries, hours=3.0, seed=1)
        assert sorted(e.id for e in out) == sorted(e.id for e in entries)

    def test_low_resource_budgets(self):
        entries = [entry(i, "lng", dur=10.0) for i in range(720)]  # 2 h
        ten = sample_asr_hours(entries, hours=10 / 60, seed=2)
        thirty = sample_asr_hours(entries, hours=30 / 60, seed=2)
        assert sum(e.duration_sec for e in ten) == pytest.approx(600.0)
        assert sum(e.duration_sec for e in thirty) == pytest.approx(1800.0)

    def test_transcripts_roundtrip(self, tmp_path):
        data = {"u1": "akwaaba oo", "u2": "b ni"}
        write_transcripts(data, tmp_path / "t.tsv")
        assert read_transcripts(tmp_path / "t.tsv") == data


class TestNormalizeText:
    def test_nfc_lowercase_squeeze(self):
        # o + combining dot below composes to a precomposed codepoint
        raw = "Ọ  kú   aro"
        out = normalize_text(raw)
        assert out == "ọ kú aro"

    def test_diacritics_preserved(self):
        assert "́" in normalize_text("tọ́")  # no precomposed form


class TestCharVocab:
    def test_contains_all_chars(self):
        vocab = build_char_vocab(["abc", "cab"], size=10)
        for c in "abc":
            assert c in vocab.symbols
        assert vocab.size == 10

    def test_deterministic_ordering(self):
        a = build_char_vocab(["banana split", "apple"], size=20)
        b = build_char_vocab(["banana split", "apple"], size=20)
        assert a.symbols == b.symbols

    def test_frequency_then_codepoint_order(self):
        vocab = build_char_vocab(["bbba ac"], size=8)
        # counts: b=3, a=2, space=1, c=1 -> space (U+0020) before 'c'
        assert vocab.symbols[:2] == ["<blank>", "<unk>"]
        assert vocab.symbols[2:6] == ["b", "a", " ", "c"]

    def test_overflow_lists_casualties(self):
        with pytest.raises(VocabOverflowError) as err:
            build_char_vocab(["abcdefgh"], size=6)
        assert len(err.value.casualties) == 4  # 8 chars, budget 4

    def test_encode_strict_raises_with_chars(self):
        vocab = build_char_vocab(["abc"], size=8)
        with pytest.raises(DataError) as err:
            vocab.encode("abz", strict=True)
        assert "z" in str(err.value)

    def test_encode_nonstrict_maps_unk(self):
        vocab = build_char_vocab(["abc"], size=8)
        ids = vocab.encode("az", strict=False)
        assert ids[1] == vocab.unk_id

    def test_roundtrip_file(self, tmp_path):
        vocab = build_char_vocab(["yorùbá ede"], size=16)
        vocab.to_file(tmp_path / "v.json")
        loaded = CharVocab.from_file(tmp_path / "v.json")
        assert loaded.symbols == vocab.symbols

    def test_dialect_fixture_size_63(self):
        from maftlab.experiments.synth import make_dialect_corpus
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            make_dialect_corpus(tmp, seed=0, train_counts=(12, 6, 8),
                                valid_count=2, test_count=2)
            transcripts = read_transcripts(f"{tmp}/transcripts.tsv")
            vocab = build_char_vocab(transcripts.values(), size=63)
            assert vocab.size == 63


class TestCtcDecode:
    def _vocab(self):
        return CharVocab(symbols=["<blank>", "<unk>", "a", "b", "c"])

    def test_collapse_rule(self):
        vocab = self._vocab()
        # frames argmax: blank, a, a, blank, b
        ids = [0, 2, 2, 0, 3]
        logits = np.full((5, 5), -10.0)
        for t, i in enumerate(ids):
            logits[t, i] = 10.0
        assert decode_ctc_greedy(logits, vocab) == "ab"

    def test_all_blanks_empty(self):
        vocab = self._vocab()
        logits = np.zeros((4, 5))
        logits[:, 0] = 5.0
        assert decode_ctc_greedy(logits, vocab) == ""

    def test_blank_separated_repeats_survive(self):
        vocab = self._vocab()
        ids = [2, 0, 2]
        logits = np.full((3, 5), -10.0)
        for t, i in enumerate(ids):
            logits[t, i] = 10.0
        assert decode_ctc_greedy(logits, vocab) == "aa"

    def test_repeat_collapse_idempotent(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            ids = rng.integers(0, 5, size=20).tolist()
            once = collapse_repeats(ids)
            assert collapse_repeats(once) == once
            # full decode applies blank removal after the repeat collapse
            assert collapse_ctc(ids) == [i for i in once if i != 0]

    def test_torch_input_accepted(self):
        vocab = self._vocab()
        logits = torch.full((2, 5), -5.0)
        logits[0, 2] = 5.0
        logits[1, 3] = 5.0
        assert decode_ctc_greedy(logits, vocab) == "ab"


class TestHeadGradients:
    def test_slid_head_and_pooling(self):
        torch.manual_seed(21)
        head = SlidHead(6, 3, hidden_dim=10).double()
        reps = torch.randn(2, 7, 6, dtype=torch.float64)
        mask = torch.ones(2, 7, dtype=torch.bool)
        mask[1, 5:] = False
        labels = torch.tensor([0, 2])

        def loss_fn():
            return torch.nn.functional.cross_entropy(head(reps, frame_mask=mask), labels)

        errors = finite_diff_errors(loss_fn, list(head.parameters()))
        assert np.mean(errors < 1e-4) >= 0.95
        assert errors.max() < 1e-3

    def test_asr_ctc_path(self):
        torch.manual_seed(22)
        head = AsrHead(6, 7, ffn_dim=10).double()
        reps = torch.randn(2, 12, 6, dtype=torch.float64)
        targets = torch.tensor([2, 3, 1, 4, 2])
        target_lengths = torch.tensor([3, 2])
        input_lengths = torch.tensor([12, 9])

        def loss_fn():
            log_probs = torch.nn.functional.log_softmax(head(reps), dim=-1)
            return torch.nn.functional.ctc_loss(
                log_probs.transpose(0, 1), targets, input_lengths, target_lengths,
                blank=0, zero_infinity=True,
            )

        errors = finite_diff_errors(loss_fn, list(head.parameters()))
        assert np.mean(errors < 1e-4) >= 0.95
        assert errors.max() < 1e-3

    def test_asr_head_has_three_hidden_layers(self):
        head = AsrHead(8, 5, ffn_dim=16)
        linears = [m for m in head.ffn if isinstance(m, torch.nn.Linear)]
        assert len(linears) == AsrHead.NUM_LAYERS
        acts = [m for m in head.ffn if isinstance(m, torch.nn.LeakyReLU)]
        assert len(acts) == AsrHead.NUM_LAYERS
