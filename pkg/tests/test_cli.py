import json

import numpy as np
import pytest

from helpers import MICRO_CONFIG, make_mini_store, tone_wave
from maftlab.cli import main
from maftlab.corpus.audio import write_wav
from maftlab.corpus.manifest import read_manifest, write_manifest
from maftlab.sampler import read_plan

RATE = 16000


def run_cli(*argv):
    return main(list(argv))


class TestDispatch:
    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "Usage" in capsys.readouterr().out

    def test_unknown_subcommand_nonzero(self, capsys):
        code = run_cli("frobnicate")
        assert code != 0
        assert code == 2

    def test_subcommand_help(self, capsys):
        assert run_cli("sampler", "--help") == 0

    def test_config_error_exit_code(self, tmp_path, capsys):
        # alpha <= 0 is a validation failure -> exit 2
        entries_path = tmp_path / "m.tsv"
        from maftlab.corpus.manifest import ManifestEntry

        write_manifest(
            [ManifestEntry("a", "a.wav", "aaa", 5.0, "toy", "train")], entries_path
        )
        code = run_cli("sampler", "plan", "--manifest", str(entries_path),
                       "--alpha", "0", "--out", str(tmp_path / "p.tsv"))
        assert code == 2


class TestCorpusCommands:
    def test_ingest_and_stats(self, tmp_path, capsys):
        raw = tmp_path / "raw"
        raw.mkdir()
        write_wav(raw / "one.wav", tone_wave(440, 1.0))
        write_wav(raw / "two.wav", tone_wave(880, 2.0))
        (tmp_path / "map.tsv").write_text("one.wav\tyor\tsrcA\ntwo.wav\tkin\tsrcB\n")
        store = tmp_path / "store"
        assert run_cli("corpus", "ingest", "--in", str(raw),
                       "--lang-map", str(tmp_path / "map.tsv"),
                       "--out", str(store)) == 0
        entries = read_manifest(store / "manifest.tsv")
        assert {e.lang for e in entries} == {"yor", "kin"}

        out_csv = tmp_path / "durations.csv"
        assert run_cli("corpus", "stats", "--manifest", str(store / "manifest.tsv"),
                       "--out", str(out_csv)) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "lang,total_hours"
        assert len(lines) == 3


class TestSegmentCommand:
    def test_segment_run(self, tmp_path):
        store = tmp_path / "store"
        store.mkdir()
        wave = np.concatenate(
            [np.zeros(RATE), tone_wave(500, 2.0), np.zeros(RATE),
             tone_wave(700, 1.5), np.zeros(RATE)]
        )
        write_wav(store / "rec.wav", wave)
        from maftlab.corpus.manifest import ManifestEntry

        write_manifest(
            [ManifestEntry("rec", "rec.wav", "aaa", len(wave) / RATE, "toy", "train")],
            store / "manifest.tsv",
        )
        out = tmp_path / "segmented"
        assert run_cli("segment", "run", "--manifest", str(store / "manifest.tsv"),
                       "--store", str(store), "--min-lang-total", "1",
                       "--out", str(out)) == 0
        entries = read_manifest(out / "manifest.tsv")
        assert len(entries) == 2
        assert all(1.0 <= e.duration_sec <= 30.0 for e in entries)


class TestSamplerCommands:
    def _manifest(self, tmp_path):
        from maftlab.corpus.manifest import ManifestEntry

        entries = []
        for lang, n in (("aaa", 30), ("bbb", 10)):
            entries.extend(
                ManifestEntry(f"{lang}{i}", f"{lang}{i}.wav", lang, 10.0, "toy", "train")
                for i in range(n)
            )
        path = tmp_path / "m.tsv"
        write_manifest(entries, path)
        return path

    def test_plan_probabilities_sum_to_one(self, tmp_path):
        manifest = self._manifest(tmp_path)
        plan_path = tmp_path / "plan.tsv"
        assert run_cli("sampler", "plan", "--manifest", str(manifest),
                       "--alpha", "0.8", "--out", str(plan_path)) == 0
        plan = read_plan(plan_path)
        assert abs(sum(plan.q.values()) - 1.0) <= 1e-12
        assert abs(sum(plan.p.values()) - 1.0) <= 1e-12

    def test_materialize(self, tmp_path):
        manifest = self._manifest(tmp_path)
        plan_path = tmp_path / "plan.tsv"
        run_cli("sampler", "plan", "--manifest", str(manifest),
                "--alpha", "0.8", "--out", str(plan_path))
        out = tmp_path / "upsampled.tsv"
        assert run_cli("sampler", "materialize", "--plan", str(plan_path),
                       "--manifest", str(manifest), "--target-hours", "0.2",
                       "--seed", "5", "--out", str(out)) == 0
        entries = read_manifest(out)
        total = sum(e.duration_sec for e in entries)
        assert total == pytest.approx(0.2 * 3600.0, abs=10.0)


class TestUnitsCommands:
    def test_features_kmeans_assign(self, tmp_path):
        store = tmp_path / "store"
        store.mkdir()
        entries, _ = make_mini_store(store)
        write_manifest(entries, store / "m.tsv")
        feats = tmp_path / "feats"
        assert run_cli("units", "features", "--manifest", str(store / "m.tsv"),
                       "--store", str(store), "--kind", "log_mel",
                       "--out", str(feats)) == 0
        assert (feats / "features_meta.json").exists()
        cb = tmp_path / "cb.bin"
        assert run_cli("units", "kmeans", "--features", str(feats), "--k", "4",
                       "--seed", "3", "--out", str(cb)) == 0
        targets = tmp_path / "targets.tsv"
        assert run_cli("units", "assign", "--features", str(feats),
                       "--codebook", str(cb), "--out", str(targets)) == 0
        from maftlab.units.targets import read_targets

        loaded = read_targets(targets)
        assert set(loaded) == {e.id for e in entries}
        assert all(v.max() < 4 for v in loaded.values())


class TestSslCommands:
    def test_train_and_select(self, tmp_path):
        store = tmp_path / "store"
        store.mkdir()
        entries, targets = make_mini_store(store, num_units=8)
        write_manifest(entries, store / "m.tsv")
        from maftlab.units.kmeans import train_kmeans, write_codebook
        from maftlab.units.targets import TargetSequence, write_targets

        rng = np.random.default_rng(0)
        write_codebook(train_kmeans(rng.normal(size=(40, 4)), k=8, seed=0),
                       tmp_path / "cb.bin")
        write_targets(
            [TargetSequence(k, v) for k, v in targets.items()], tmp_path / "t.tsv"
        )
        cfg = tmp_path / "train.cfg"
        cfg.write_text(
            "mode=scratch\ncodebook_ref={}\ntotal_steps=3\nwarmup_steps=1\n"
            "validate_every=2\nseed=4\n".format(tmp_path / "cb.bin")
        )
        out = tmp_path / "run"
        # note: uses the full-size default encoder; 3 steps keeps it quick
        assert run_cli("ssl", "train", "--config", str(cfg),
                       "--manifest", str(store / "m.tsv"),
                       "--valid", str(store / "m.tsv"),
                       "--targets", str(tmp_path / "t.tsv"),
                       "--store", str(store), "--out", str(out)) == 0
        assert (out / "checkpoint.pt").exists()
        assert run_cli("ssl", "select", "--history", str(out / "loss_curve.csv")) == 0

    def test_select_reports_argmin(self, tmp_path, capsys):
        curve = tmp_path / "c.csv"
        curve.write_text(
            "step,train_loss,valid_loss,lr\n10,3.0,2.5,1e-3\n20,2.0,1.5,1e-3\n"
            "30,2.1,1.9,1e-3\n"
        )
        assert run_cli("ssl", "select", "--history", str(curve)) == 0
        assert capsys.readouterr().out.strip() == "20"


class TestMetricsCommand:
    def test_slid_scoring(self, tmp_path, capsys):
        (tmp_path / "ref.tsv").write_text("u1\taaa\nu2\tbbb\nu3\taaa\n")
        (tmp_path / "pred.tsv").write_text("u1\taaa\nu2\taaa\nu3\taaa\n")
        out = tmp_path / "scored"
        assert run_cli("metrics", "score", "--task", "slid",
                       "--pred", str(tmp_path / "pred.tsv"),
                       "--ref", str(tmp_path / "ref.tsv"),
                       "--out-dir", str(out)) == 0
        rows = [json.loads(l) for l in (out / "report.jsonl").read_text().splitlines()]
        by_lang = {r["lang"]: r for r in rows}
        assert by_lang["aaa"]["f1"] == pytest.approx(0.8)
        assert by_lang["bbb"]["f1"] == 0.0
        assert (out / "confusion.csv").exists()

    def test_asr_scoring(self, tmp_path):
        (tmp_path / "ref.tsv").write_text("u1\taaa\tab c\nu2\taaa\tde f\n")
        (tmp_path / "pred.tsv").write_text("u1\tab c\nu2\tde g\n")
        out = tmp_path / "scored"
        assert run_cli("metrics", "score", "--task", "asr",
                       "--pred", str(tmp_path / "pred.tsv"),
                       "--ref", str(tmp_path / "ref.tsv"),
                       "--out-dir", str(out)) == 0
        rows = [json.loads(l) for l in (out / "report.jsonl").read_text().splitlines()]
        by_lang = {r["lang"]: r for r in rows}
        assert by_lang["aaa"]["wer"] == pytest.approx(0.25)

    def test_missing_predictions_rejected(self, tmp_path):
        (tmp_path / "ref.tsv").write_text("u1\taaa\nu2\tbbb\n")
        (tmp_path / "pred.tsv").write_text("u1\taaa\n")
        assert run_cli("metrics", "score", "--task", "slid",
                       "--pred", str(tmp_path / "pred.tsv"),
                       "--ref", str(tmp_path / "ref.tsv")) == 2


class TestPlotsCommand:
    def test_durations_from_manifest_matches_stats(self, tmp_path):
        from maftlab.corpus.manifest import ManifestEntry

        entries = [
            ManifestEntry("a", "a.wav", "yor", 7200.0, "toy", "train"),
            ManifestEntry("b", "b.wav", "kin", 3600.0, "toy", "train"),
        ]
        write_manifest(entries, tmp_path / "m.tsv")
        stats_csv = tmp_path / "stats.csv"
        run_cli("corpus", "stats", "--manifest", str(tmp_path / "m.tsv"),
                "--out", str(stats_csv))
        out = tmp_path / "plots"
        assert run_cli("plots", "emit", "--kind", "durations",
                       "--in", str(tmp_path / "m.tsv"), "--out", str(out)) == 0
        assert (out / "durations.csv").read_text() == stats_csv.read_text()
        assert (out / "durations.png").exists()

    def test_empty_report_header_only(self, tmp_path):
        src = tmp_path / "empty.csv"
        src.write_text("model\tbudget_min\tlang\twer\tcer\n")
        out = tmp_path / "plots"
        assert run_cli("plots", "emit", "--kind", "low_resource",
                       "--in", str(src), "--out", str(out)) == 0
        assert (out / "low_resource.csv").read_text().splitlines() == [
            "model\tbudget_min\tlang\twer\tcer"
        ]

    def test_no_render_skips_figure(self, tmp_path):
        src = tmp_path / "r.csv"
        src.write_text("model\tbudget_min\tlang\twer\tcer\nm\t10\tavg\t0.5\t0.2\n")
        out = tmp_path / "plots"
        assert run_cli("plots", "emit", "--kind", "low_resource", "--in", str(src),
                       "--out", str(out), "--no-render") == 0
        assert not (out / "low_resource.png").exists()
