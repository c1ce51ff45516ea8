"""End-to-end command-line behavior: artifacts, determinism, exit codes."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from earlysep import parse_psv
from earlysep.archive import read_window_archive
from earlysep.checkpoint import load_checkpoint, read_sections
from earlysep.cli import main

TOY_CONFIG = """
# small architecture for fast integration runs
n_views = 2
view_dim = 3
view_kernel = 3
long_channels = 4
short_channels = 4
heads = 2
proj_dim = 8
epochs = 4
batch_size = 8
seed = 11
gbdt_rounds = 10
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.txt"
    path.write_text(TOY_CONFIG)
    return str(path)


@pytest.fixture
def archive(tmp_path):
    path = tmp_path / "synth.tswa"
    code = main(["synthesize", "--out", str(path), "--per-class", "10", "--classes", "2",
                 "--features", "3", "--hours", "6", "--motif-strength", "5",
                 "--noise-sd", "0.5", "--seed", "2"])
    assert code == 0
    return str(path)


def psv_dir(tmp_path, rng, n=3, hours=8):
    # even patients score no points (class 0), odd ones trip the low-pressure
    # rule (class 1), so the archives always carry two classes
    d = tmp_path / "psv"
    d.mkdir(exist_ok=True)
    cols = "SBP|Resp|SepsisLabel"
    for i in range(n):
        base = 120.0 if i % 2 == 0 else 95.0
        rows = [cols]
        for t in range(hours):
            noise = float(rng.normal(0.0, 1.0))
            rows.append(f"{base + t + noise:.2f}|18|0")
        (d / f"p{i:03d}.psv").write_text("\n".join(rows) + "\n")
    return d


class TestIngest:
    def test_reports_per_patient_counts(self, tmp_path, rng, capsys):
        d = psv_dir(tmp_path, rng)
        out = tmp_path / "w.tswa"
        assert main(["ingest", "--data-dir", str(d), "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "patients: 3" in text
        report = (tmp_path / "w.tswa.report.txt").read_text()
        assert "slot  windows  skipped" in report

    def test_empty_dir_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        code = main(["ingest", "--data-dir", str(empty), "--out", str(tmp_path / "x")])
        assert code == 2
        assert "no PSV files" in capsys.readouterr().err

    def test_archive_round_trip_bit_identical(self, tmp_path, rng):
        d = psv_dir(tmp_path, rng)
        out1, out2 = tmp_path / "a.tswa", tmp_path / "b.tswa"
        assert main(["ingest", "--data-dir", str(d), "--out", str(out1)]) == 0
        assert main(["ingest", "--data-dir", str(d), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        loaded = read_window_archive(out1)
        assert loaded.columns == ["SBP", "Resp", "SepsisLabel"]

    def test_bad_file_reported_others_ingested(self, tmp_path, rng, capsys):
        d = psv_dir(tmp_path, rng)
        (d / "broken.psv").write_text("a|b\n1\n")
        out = tmp_path / "w.tswa"
        assert main(["ingest", "--data-dir", str(d), "--out", str(out)]) == 0
        err = capsys.readouterr().err
        assert "broken.psv" in err and "skipped" in err


class TestTrain:
    def test_checkpoint_and_history(self, tmp_path, config_file, archive):
        ckpt = tmp_path / "m.ckpt"
        code = main(["train", "--config", config_file, "--windows", archive,
                     "--slot", "4", "--variant", "full", "--out-checkpoint", str(ckpt)])
        assert code == 0
        assert ckpt.exists()
        history = (tmp_path / "m.ckpt.history.csv").read_text().strip().splitlines()
        assert history[0] == "epoch,l_mse,l_reg,l_pred,total,val_accuracy"
        assert len(history) == 1 + 4  # header + one row per epoch

    def test_tree_only_checkpoint_sections(self, tmp_path, config_file, archive):
        ckpt = tmp_path / "nb.ckpt"
        assert main(["train", "--config", config_file, "--windows", archive,
                     "--slot", "4", "--variant", "no_both",
                     "--out-checkpoint", str(ckpt)]) == 0
        sections = read_sections(ckpt)
        assert "GBDT" in sections and "NETP" not in sections

    def test_same_seed_byte_identical_checkpoints(self, tmp_path, config_file, archive):
        c1, c2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        for c in (c1, c2):
            assert main(["train", "--config", config_file, "--windows", archive,
                         "--slot", "4", "--out-checkpoint", str(c), "--seed", "5"]) == 0
        assert c1.read_bytes() == c2.read_bytes()

    def test_config_violation_exits_2(self, tmp_path, archive, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("heads = 3\nshort_channels = 4\n")
        code = main(["train", "--config", str(bad), "--windows", archive,
                     "--slot", "4", "--out-checkpoint", str(tmp_path / "x.ckpt")])
        assert code == 2
        assert "heads" in capsys.readouterr().err

    def test_unknown_config_key_exits_2(self, tmp_path, archive, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("leraning_rate = 0.1\n")
        code = main(["train", "--config", str(bad), "--windows", archive,
                     "--slot", "4", "--out-checkpoint", str(tmp_path / "x.ckpt")])
        assert code == 2
        assert "unknown configuration key" in capsys.readouterr().err

    def test_divergent_training_exits_3(self, tmp_path, archive):
        bad = tmp_path / "diverge.txt"
        bad.write_text(TOY_CONFIG + "learning_rate = 1e155\nalpha = 1.0\n")
        with np.errstate(over="ignore"):
            code = main(["train", "--config", str(bad), "--windows", archive,
                         "--slot", "4", "--out-checkpoint", str(tmp_path / "x.ckpt")])
        assert code == 3


class TestSweep:
    def test_csv_row_count_and_svg(self, tmp_path, config_file, archive):
        out = tmp_path / "reports"
        code = main(["sweep", "--config", config_file, "--windows", archive,
                     "--slots", "3,5", "--variants", "full,no_both", "--runs", "2",
                     "--out-dir", str(out)])
        assert code == 0
        rows = (out / "sweep.csv").read_text().strip().splitlines()
        assert len(rows) == 1 + 4
        for metric in ("accuracy", "macro_f1"):
            root = ET.parse(out / f"{metric}.svg").getroot()
            assert root.tag.endswith("svg")

    def test_rerun_identical_csv_bytes(self, tmp_path, config_file, archive):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert main(["sweep", "--config", config_file, "--windows", archive,
                         "--slots", "3", "--variants", "no_both,full", "--runs", "2",
                         "--out-dir", str(out), "--seed", "9"]) == 0
            outs.append((out / "sweep.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_missing_slot_exits_2(self, tmp_path, config_file, archive, capsys):
        code = main(["sweep", "--config", config_file, "--windows", archive,
                     "--slots", "21", "--variants", "full", "--runs", "1",
                     "--out-dir", str(tmp_path / "r")])
        assert code == 2
        assert "no windows for slot" in capsys.readouterr().err

    def test_workers_env_var_default(self, tmp_path, config_file, archive, monkeypatch):
        monkeypatch.setenv("MEET_TS_WORKERS", "3")
        baseline = tmp_path / "serial"
        assert main(["sweep", "--config", config_file, "--windows", archive,
                     "--slots", "3", "--variants", "no_both", "--runs", "2",
                     "--out-dir", str(baseline), "--workers", "1"]) == 0
        from_env = tmp_path / "env"
        assert main(["sweep", "--config", config_file, "--windows", archive,
                     "--slots", "3", "--variants", "no_both", "--runs", "2",
                     "--out-dir", str(from_env)]) == 0
        assert (baseline / "sweep.csv").read_bytes() == (from_env / "sweep.csv").read_bytes()

    def test_ablate_covers_all_variants(self, tmp_path, config_file, archive):
        out = tmp_path / "ab"
        assert main(["ablate", "--config", config_file, "--windows", archive,
                     "--slot", "4", "--runs", "1", "--out-dir", str(out)]) == 0
        rows = (out / "sweep.csv").read_text().strip().splitlines()[1:]
        variants = [r.split(",")[1] for r in rows]
        assert variants == ["full", "no_mere", "no_cdta", "no_both"]


class TestGradcheckCommand:
    def test_default_passes(self, capsys):
        assert main(["gradcheck"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 16
        assert "composed_model_loss" in out

    def test_each_op_listed_exactly_once(self, capsys):
        main(["gradcheck"])
        lines = [l for l in capsys.readouterr().out.splitlines() if "max_rel_err" in l]
        names = [l.split()[0] for l in lines]
        assert len(names) == len(set(names)) == 16

    def test_corrupted_gradient_fails_and_names_op(self, capsys):
        code = main(["gradcheck", "--corrupt", "maxpool1d"])
        assert code == 1
        captured = capsys.readouterr()
        assert "maxpool1d" in captured.err


class TestPredict:
    @pytest.fixture
    def checkpoint(self, tmp_path, config_file, rng):
        d = psv_dir(tmp_path, rng, n=6)
        archive_path = tmp_path / "w.tswa"
        assert main(["ingest", "--data-dir", str(d), "--out", str(archive_path)]) == 0
        ckpt = tmp_path / "m.ckpt"
        assert main(["train", "--config", config_file, "--windows", str(archive_path),
                     "--slot", "4", "--out-checkpoint", str(ckpt)]) == 0
        return ckpt, d

    def test_emits_well_formed_lines(self, checkpoint, capsys):
        ckpt, d = checkpoint
        assert main(["predict", "--checkpoint", str(ckpt), "--psv", str(d),
                     "--slot", "4"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 6
        for line in lines:
            fields = line.split(",")
            probs = [float(p) for p in fields[2:]]
            assert abs(sum(probs) - 1.0) < 1e-6
            assert int(fields[1]) == int(np.argmax(probs))

    def test_short_record_warns_but_exits_zero(self, tmp_path, checkpoint, capsys):
        ckpt, d = checkpoint
        (d / "zshort.psv").write_text("SBP|Resp|SepsisLabel\n100|18|0\n")
        assert main(["predict", "--checkpoint", str(ckpt), "--psv", str(d),
                     "--slot", "4"]) == 0
        captured = capsys.readouterr()
        assert "shorter than slot" in captured.err
        assert len(captured.out.strip().splitlines()) == 6

    def test_matches_library_prediction(self, checkpoint, capsys):
        ckpt, d = checkpoint
        main(["predict", "--checkpoint", str(ckpt), "--psv", str(d), "--slot", "4"])
        line = capsys.readouterr().out.strip().splitlines()[0]
        pid = line.split(",")[0]

        loaded = load_checkpoint(ckpt)
        record = parse_psv((d / f"{pid}.psv").read_text(), patient_id=pid)
        order = [record.columns.index(c) for c in loaded.columns]
        window = record.values[:, order][:4].T[None]
        x = loaded.preprocessor.transform(window)
        probs = loaded.head.predict_proba(loaded.network.embed(x))[0]
        assert line == pid + f",{int(np.argmax(probs))}," + ",".join(f"{p:.6f}" for p in probs)

    def test_no_predictions_exits_2(self, tmp_path, checkpoint):
        ckpt, _ = checkpoint
        lonely = tmp_path / "lonely"
        lonely.mkdir()
        (lonely / "only.psv").write_text("SBP|Resp|SepsisLabel\n100|18|0\n")
        assert main(["predict", "--checkpoint", str(ckpt), "--psv", str(lonely),
                     "--slot", "4"]) == 2

    def test_missing_column_warns_and_skips(self, tmp_path, checkpoint, capsys):
        ckpt, d = checkpoint
        odd = tmp_path / "odd"
        odd.mkdir()
        (odd / "noresp.psv").write_text("SBP|SepsisLabel\n" + "100|0\n" * 5)
        assert main(["predict", "--checkpoint", str(ckpt), "--psv", str(odd),
                     "--slot", "4"]) == 2
        assert "missing columns" in capsys.readouterr().err

    def test_extra_columns_are_ignored(self, tmp_path, checkpoint, capsys):
        ckpt, _ = checkpoint
        extra = tmp_path / "extra"
        extra.mkdir()
        (extra / "more.psv").write_text(
            "HR|SBP|Resp|SepsisLabel\n" + "80|100|18|0\n" * 5)
        assert main(["predict", "--checkpoint", str(ckpt), "--psv", str(extra),
                     "--slot", "4"]) == 0
        line = capsys.readouterr().out.strip()
        assert line.startswith("more,")


def test_synthesize_deterministic(tmp_path):
    a, b = tmp_path / "a.tswa", tmp_path / "b.tswa"
    for p in (a, b):
        assert main(["synthesize", "--out", str(p), "--per-class", "4", "--classes", "2",
                     "--features", "2", "--hours", "5", "--seed", "7"]) == 0
    assert a.read_bytes() == b.read_bytes()
