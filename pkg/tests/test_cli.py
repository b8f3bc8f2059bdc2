"""CLI tests: JSON/CSV schemas, determinism, and exit codes."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from snrkit.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestBoundsCommand:
    def test_tail_value(self, capsys):
        code, out, _ = run_cli(capsys, "bounds", "--mu", "0", "--var", "1", "--tail", "2")
        assert code == 0
        doc = json.loads(out)
        assert doc["bound"] == pytest.approx(0.2)
        assert doc["cdf_envelope"] == [pytest.approx(0.8), 1.0]

    def test_outside_with_verify(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--mu", "0", "--var", "1",
            "--outside", "-2", "2", "--verify",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["bound"] == pytest.approx(0.25)
        assert doc["oracle_gap"] < 1e-3
        assert doc["witness"]
        total = sum(p for _, p in doc["witness"])
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_inside_reports_both_bounds(self, capsys):
        code, out, _ = run_cli(
            capsys, "bounds", "--mu", "0", "--var", "1", "--inside", "-2", "2"
        )
        doc = json.loads(out)
        assert code == 0
        assert doc["bound"] == 1.0
        assert doc["lower_bound"] == pytest.approx(0.75)

    def test_invalid_input_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "bounds", "--mu", "0", "--var", "0", "--tail", "1")
        assert code == 2
        assert "variance" in err


class TestParametricSimCommand:
    def test_json_schema_and_determinism(self, capsys):
        args = ("parametric-sim", "--trials", "5000", "--seed", "12")
        code1, out1, _ = run_cli(capsys, *args)
        code2, out2, _ = run_cli(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2
        doc = json.loads(out1)
        for key in ("acc_snr", "acc_ml", "tau_snr", "tau_ml", "n_trials", "seed"):
            assert key in doc
        assert doc["n_trials"] == 5000

    def test_custom_p_vector(self, capsys):
        code, out, _ = run_cli(
            capsys, "parametric-sim", "--p", "0.2,0.3", "--trials", "2000"
        )
        assert code == 0
        assert json.loads(out)["p"] == [0.2, 0.3]

    def test_bad_p_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "parametric-sim", "--p", "0.0,0.5")
        assert code == 2


class TestTrainCommand:
    def test_synth_ce_reaches_separable_accuracy(self, capsys, tmp_path):
        out_csv = str(tmp_path / "m.csv")
        code, out, _ = run_cli(
            capsys, "train", "--dataset", "synth", "--loss", "ce",
            "--epochs", "8", "--seed", "0", "--out-csv", out_csv,
            "--synth-classes", "5", "--synth-dim", "16",
            "--synth-samples-per-class", "200", "--hidden-dims", "64,32",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["final_val_accuracy"] >= 0.99
        with open(out_csv) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["epoch", "train_loss_ce", "train_loss_snr", "val_accuracy"]
        assert len(rows) == 9  # header + one row per epoch
        assert [r[0] for r in rows[1:]] == [str(i) for i in range(1, 9)]

    def test_snr_epoch_mode_csv_and_eta(self, capsys, tmp_path):
        out_csv = str(tmp_path / "m.csv")
        code, out, _ = run_cli(
            capsys, "train", "--dataset", "synth", "--loss", "ce-snr-epoch",
            "--epochs", "3", "--seed", "1", "--out-csv", out_csv,
            "--synth-classes", "4", "--synth-dim", "8",
            "--synth-samples-per-class", "100", "--hidden-dims", "32",
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["eta_final"]) == 4
        assert doc["final_train_loss_snr"] > 0

    def test_paired_modes_same_seed(self, capsys, tmp_path):
        # three paired runs over the loss modes produce comparable CSVs
        finals = {}
        for mode in ("ce", "ce-snr-batch", "ce-snr-epoch"):
            out_csv = str(tmp_path / f"{mode}.csv")
            code, out, _ = run_cli(
                capsys, "train", "--dataset", "synth", "--loss", mode,
                "--epochs", "3", "--seed", "7", "--out-csv", out_csv,
                "--synth-classes", "4", "--synth-dim", "8",
                "--synth-samples-per-class", "100", "--hidden-dims", "32",
            )
            assert code == 0
            finals[mode] = json.loads(out)["final_val_accuracy"]
            with open(out_csv) as fh:
                assert len(list(csv.reader(fh))) == 4
        assert set(finals) == {"ce", "ce-snr-batch", "ce-snr-epoch"}

    def test_missing_mnist_files_exit_2(self, capsys, monkeypatch, tmp_path):
        monkeypatch.delenv("SNR_DATA_DIR", raising=False)
        code, _, err = run_cli(
            capsys, "train", "--dataset", "mnist",
            "--images", str(tmp_path / "nope1"), "--labels", str(tmp_path / "nope2"),
        )
        assert code == 2
        assert "not found" in err and "curl" in err

    def test_divergence_exit_3(self, capsys, tmp_path):
        with np.errstate(all="ignore"):
            code, _, err = run_cli(
                capsys, "train", "--dataset", "synth", "--loss", "ce",
                "--epochs", "3", "--lr", "1e12", "--out-csv", str(tmp_path / "m.csv"),
                "--synth-classes", "3", "--synth-dim", "8",
                "--synth-samples-per-class", "64", "--hidden-dims", "16",
                "--grad-clip-norm", "0",  # disable the circuit breaker
            )
        assert code == 3
        assert "non-finite" in err

    def test_config_file_merging_and_flag_priority(self, capsys, tmp_path):
        cfg = {
            "epochs": 2,
            "snr.lambda": 0.5,
            "snr.mode": "epoch",
            "synth_classes": 4,
            "synth_dim": 8,
            "synth_samples_per_class": 100,
            "hidden_dims": [32],
            "seed": 3,
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out_csv = str(tmp_path / "m.csv")
        code, out, _ = run_cli(
            capsys, "train", "--config", str(path), "--loss", "ce-snr",
            "--epochs", "3", "--out-csv", out_csv,
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["loss_mode"] == "ce-snr-epoch"  # snr.mode from config
        assert doc["epochs"] == 3  # explicit flag beats config

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"learning_rate": 0.1}))
        code, _, err = run_cli(capsys, "train", "--config", str(path))
        assert code == 2
        assert "unknown config keys" in err


class TestConsoleScript:
    def test_entry_point_installed(self):
        proc = subprocess.run(
            [sys.executable, "-m", "snrkit.cli", "bounds",
             "--mu", "1", "--var", "4", "--tail", "3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["bound"] == pytest.approx(0.5)
