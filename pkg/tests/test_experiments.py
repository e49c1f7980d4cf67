import numpy as np
import pytest

from maftlab.corpus.audio import load_record
from maftlab.corpus.manifest import compute_durations, read_manifest
from maftlab.errors import ConfigError
from maftlab.experiments.recipes import ExperimentRecipe, published_reference
from maftlab.experiments.synth import (
    DEFAULT_LANGUAGES,
    make_dialect_corpus,
    make_noisy_copy,
    make_toy_corpus,
)
from maftlab.heads.data import read_transcripts


class TestRecipeParsing:
    def test_parse_and_defaults(self, tmp_path):
        path = tmp_path / "r.recipe"
        path.write_text("kind=low_resource\nseed=5\nencoder_file=enc.pt\n"
                        "budgets_minutes=10,30\n")
        (tmp_path / "enc.pt").write_bytes(b"")
        recipe = ExperimentRecipe.from_file(path)
        assert recipe.kind == "low_resource"
        assert recipe.seed == 5
        assert recipe.stages == ("synthesize", "finetune", "report")
        assert recipe.get_list("budgets_minutes", ()) == ["10", "30"]

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "r.recipe"
        path.write_text("kind=grid_search\n")
        with pytest.raises(ConfigError):
            ExperimentRecipe.from_file(path)

    def test_stage_order_enforced(self, tmp_path):
        path = tmp_path / "r.recipe"
        path.write_text("kind=variant_comparison\nstages=finetune,teacher\n")
        with pytest.raises(ConfigError):
            ExperimentRecipe.from_file(path)

    def test_stage_subset_allowed(self, tmp_path):
        path = tmp_path / "r.recipe"
        path.write_text("kind=variant_comparison\nstages=synthesize,prepare\n")
        recipe = ExperimentRecipe.from_file(path)
        assert recipe.stages == ("synthesize", "prepare")

    def test_missing_config_reference_rejected(self, tmp_path):
        path = tmp_path / "r.recipe"
        path.write_text("kind=variant_comparison\nvad_config=missing.cfg\n")
        with pytest.raises(ConfigError):
            ExperimentRecipe.from_file(path)


class TestToyCorpus:
    def test_ledger_matches_manifests(self, tmp_path):
        ledger = make_toy_corpus(tmp_path, seed=2, pretrain_seconds_per_lang=40.0,
                                 labeled_train=5, labeled_valid=2, labeled_test=2)
        recs = read_manifest(tmp_path / "recordings.tsv")
        totals = compute_durations(recs).by_language
        for lang, expect in ledger["pretrain_seconds"].items():
            assert totals[lang] == pytest.approx(expect, abs=1e-6)
        labeled = read_manifest(tmp_path / "labeled.tsv")
        lab_totals = compute_durations(labeled).by_language
        for lang, expect in ledger["labeled_seconds"].items():
            assert lab_totals[lang] == pytest.approx(expect, abs=1e-6)

    def test_transcripts_cover_labeled(self, tmp_path):
        make_toy_corpus(tmp_path, seed=2, pretrain_seconds_per_lang=30.0,
                        labeled_train=4, labeled_valid=2, labeled_test=2)
        labeled = read_manifest(tmp_path / "labeled.tsv")
        transcripts = read_transcripts(tmp_path / "transcripts.tsv")
        assert {e.id for e in labeled} <= set(transcripts)
        chars = set("".join(transcripts.values()))
        allowed = set(" ") | set("".join(l.chars for l in DEFAULT_LANGUAGES))
        assert chars <= allowed

    def test_deterministic(self, tmp_path):
        a = make_toy_corpus(tmp_path / "a", seed=9, pretrain_seconds_per_lang=30.0,
                            labeled_train=3, labeled_valid=1, labeled_test=1)
        b = make_toy_corpus(tmp_path / "b", seed=9, pretrain_seconds_per_lang=30.0,
                            labeled_train=3, labeled_valid=1, labeled_test=1)
        assert a == b
        wav_a = (tmp_path / "a" / "labeled" / "aaa_train0000.wav").read_bytes()
        wav_b = (tmp_path / "b" / "labeled" / "aaa_train0000.wav").read_bytes()
        assert wav_a == wav_b


class TestDialectCorpus:
    def test_three_dialects_with_scarcity(self, tmp_path):
        make_dialect_corpus(tmp_path, seed=1, train_counts=(20, 5, 10),
                            valid_count=2, test_count=3)
        entries = read_manifest(tmp_path / "labeled.tsv")
        by_dialect = {}
        for e in entries:
            if e.split == "train":
                by_dialect[e.lang] = by_dialect.get(e.lang, 0) + 1
        assert by_dialect == {"dla": 20, "dlb": 5, "dlc": 10}


class TestNoisyCopy:
    def test_snr_and_manifest(self, tmp_path):
        make_toy_corpus(tmp_path / "c", seed=3, pretrain_seconds_per_lang=30.0,
                        labeled_train=2, labeled_valid=1, labeled_test=2)
        entries = [e for e in read_manifest(tmp_path / "c" / "labeled.tsv")
                   if e.split == "test"][:4]
        noisy = make_noisy_copy(tmp_path / "c", entries, tmp_path / "n",
                                snr_db=10.0, seed=0)
        assert len(noisy) == len(entries)
        for clean_e, noisy_e in zip(entries, noisy):
            clean = load_record(tmp_path / "c", clean_e).samples
            dirty = load_record(tmp_path / "n", noisy_e).samples
            noise = dirty - clean
            snr = 10 * np.log10(np.mean(clean**2) / np.mean(noise**2))
            assert snr == pytest.approx(10.0, abs=1.0)


class TestPublishedReference:
    def test_loads_with_label(self):
        ref = published_reference()
        assert "do not reproduce" in ref["note"]
        assert "benchmark" in ref and "cross_corpus" in ref
        models = ref["benchmark"]["models"]
        assert models["AfriHuBERT-n"]["asr_wer_avg_star"] == 47.9
