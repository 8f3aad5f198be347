import subprocess
import sys

import numpy as np
import pytest

from tsegan.cli import main
from tsegan.data import save_wav
from tsegan.metrics import AudioSignal
from tsegan.train import TrainConfig


@pytest.fixture
def wav(tmp_path):
    def make(name, x, sr=8000):
        p = tmp_path / name
        save_wav(p, AudioSignal(np.asarray(x, float), sr))
        return str(p)
    return make


def test_metrics_identical_files_hit_cap(wav, capsys):
    x = 0.3 * np.sin(np.arange(2000) * 0.05)
    a = wav("a.wav", x)
    assert main(["metrics", "--est", a, "--ref", a]) == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert out["si_snr_db"].startswith("120.000000") and "capped" in out["si_snr_db"]
    assert float(out["q_si_snr"]) == pytest.approx(np.tanh(1.2), abs=1e-6)


def test_metrics_mismatched_inputs(wav, capsys):
    a = wav("a.wav", np.ones(100) * 0.1)
    b = wav("b.wav", np.ones(101) * 0.1)
    c = wav("c.wav", np.ones(100) * 0.1, sr=16000)
    assert main(["metrics", "--est", a, "--ref", b]) == 1
    assert main(["metrics", "--est", a, "--ref", c]) == 1
    assert "differ" in capsys.readouterr().err


def test_metrics_short_signal_reports_nan_ssnr(wav, capsys):
    a = wav("a.wav", np.linspace(-0.5, 0.5, 50))
    assert main(["metrics", "--est", a, "--ref", a]) == 0
    assert "ssnr_db\tnan" in capsys.readouterr().out


def test_metrics_missing_or_bad_wav(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav")
    assert main(["metrics", "--est", str(bad), "--ref", str(bad)]) == 1
    assert main(["metrics", "--est", str(tmp_path / "nope.wav"), "--ref", str(bad)]) == 1


def test_verify_theory_million(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    assert main(["verify-theory", "--samples", "1000000", "--seed", "7", "--csv", str(csv_path)]) == 0
    out = capsys.readouterr().out
    assert "minkowski" in out
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "check,status,samples,violations,max_violation,tolerance"
    assert rows[1].split(",")[2:4] == ["1000000", "0"]


def test_verify_theory_rejects_zero_samples():
    assert main(["verify-theory", "--samples", "0"]) == 1


def test_train_missing_config(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "not found" in capsys.readouterr().err


def test_train_bad_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("learning_speed = 3\n")
    assert main(["train", "--config", str(cfg)]) == 1


@pytest.mark.parametrize("argv", [["metrics", "--bogus"], ["dance"], [],
                                  ["synth-data", "--out", "x", "--noise", "brown"],
                                  ["verify-theory", "--samples", "many"]])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_synth_train_evaluate_flow(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth-data", "--out", str(data), "--n", "4", "--dur", "0.05", "--seed", "2"]) == 0
    test = tmp_path / "test"
    assert main(["synth-data", "--out", str(test), "--n", "3", "--dur", "0.05", "--offset", "1000000"]) == 0
    cfg = TrainConfig(n_filters=8, window=8, bottleneck=4, hidden=8, blocks=1, repeats=1,
                      disc_channels=(2, 2, 2, 2), disc_fc=(4,), batch_size=2, epochs=1,
                      manifest=str(data / "manifest.tsv"), segment=0.05, ckpt_dir=str(tmp_path / "ck"))
    (tmp_path / "run.cfg").write_text(cfg.to_text())
    assert main(["train", "--config", str(tmp_path / "run.cfg")]) == 0
    ckpt = tmp_path / "ck" / "last.ckpt"
    assert ckpt.is_file()
    out_csv = tmp_path / "report.csv"
    wavs = tmp_path / "enh"
    assert main(["evaluate", "--ckpt", str(ckpt), "--data", str(test / "manifest.tsv"),
                 "--out-csv", str(out_csv), "--write-wavs", str(wavs)]) == 0
    assert len(out_csv.read_text().splitlines()) == 4
    assert len(list(wavs.glob("*.wav"))) == 3
    # resuming a finished run is a no-op that still succeeds
    assert main(["train", "--config", str(tmp_path / "run.cfg"), "--resume", str(ckpt)]) == 0
    assert main(["train", "--config", str(tmp_path / "run.cfg"), "--resume", str(tmp_path / "x.ckpt")]) == 1


def test_evaluate_missing_inputs(tmp_path):
    assert main(["evaluate", "--ckpt", str(tmp_path / "a"), "--data", "b", "--out-csv", "c"]) == 1


def test_evaluate_corrupt_checkpoint(tmp_path):
    (tmp_path / "bad.ckpt").write_text("garbage\n")
    main(["synth-data", "--out", str(tmp_path / "d"), "--n", "1", "--dur", "0.05"])
    assert main(["evaluate", "--ckpt", str(tmp_path / "bad.ckpt"), "--data", str(tmp_path / "d" / "manifest.tsv"),
                 "--out-csv", str(tmp_path / "r.csv")]) == 1


def test_module_entry_point_exit_code():
    r = subprocess.run([sys.executable, "-m", "tsegan", "train", "--config", "missing.cfg"],
                       capture_output=True, text=True)
    assert r.returncode == 1
    r = subprocess.run([sys.executable, "-m", "tsegan", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "verify-theory" in r.stdout
