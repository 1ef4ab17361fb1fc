import csv
import io
import json
import math

import numpy as np
import pytest

from qmemory import cli
from qmemory.errors import NoConvergence
from qmemory.inference import SWEEP_COLUMNS
from qmemory.process import word_probabilities, zoo_machine

GOLDEN = {"name": "golden-mean-3-2", "params": {"p": 0.9}}


def write_config(tmp_path, **cfg):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- generate ------------------------------------------------------------------

def test_generate_fair_coin(tmp_path):
    cfg = write_config(tmp_path, process="fair-coin", N=100, seed=7)
    out = tmp_path / "coin.txt"
    assert run("generate", "--config", cfg, "--out", out) == 0
    text = out.read_text()
    assert len(text) == 100 and set(text) <= {"0", "1"}
    meta = json.loads((tmp_path / "coin.txt.json").read_text())
    assert meta["N"] == 100 and meta["seed"] == 7
    assert meta["machine"]["name"] == "fair-coin"

    again = tmp_path / "again.txt"
    assert run("generate", "--config", cfg, "--out", again) == 0
    assert again.read_bytes() == out.read_bytes()


def test_generate_golden_mean_statistics(tmp_path):
    out = tmp_path / "gm.txt"
    n = 10**6
    assert run("generate", "--process", "golden-mean-3-2", "--param", "p=0.9",
               "--N", n, "--seed", 3, "--out", out) == 0
    codes = np.frombuffer(out.read_bytes(), dtype=np.uint8) - ord("0")
    c = codes.astype(np.int64)
    words = c[:-3] * 8 + c[1:-2] * 4 + c[2:-1] * 2 + c[3:]
    freq = np.bincount(words, minlength=16) / words.size
    exact = word_probabilities(zoo_machine("golden-mean-3-2", p=0.9), 4)
    assert np.max(np.abs(freq - exact)) <= 5 / math.sqrt(n)


def test_generate_needs_output(tmp_path):
    cfg = write_config(tmp_path, process="fair-coin", N=100, seed=7)
    assert run("generate", "--config", cfg) == cli.EXIT_CONFIG


# -- infer ----------------------------------------------------------------------

def test_infer_from_sequence_file(tmp_path):
    seq = tmp_path / "gm.txt"
    run("generate", "--process", "golden-mean-3-2", "--param", "p=0.9", "--N", 10**6, "--seed", 1, "--out", seq)
    cfg = write_config(tmp_path, sequence="gm.txt", L=[2, 3, 4])
    out = tmp_path / "infer.csv"
    assert run("infer", "--config", cfg, "--out", out) == 0
    with open(out, newline="") as fh:
        header = next(csv.reader(fh))
    assert header == SWEEP_COLUMNS
    rows = read_csv(out)
    assert [int(r["L"]) for r in rows] == [2, 3, 4]
    row3 = rows[1]
    assert row3["process"] == "golden-mean-3-2" and row3["params"] == "p=0.9"
    assert abs(float(row3["cq_estimate"]) - float(row3["cq_exact"])) <= 0.05
    assert row3["undersampled_flag"] == "false"


def test_infer_fair_coin(tmp_path, capsys):
    assert run("infer", "--process", "fair-coin", "--N", 10**5, "--seed", 2, "--L", 2) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1
    assert float(rows[0]["cq_estimate"]) <= 0.05


def test_infer_external_sequence(tmp_path, capsys):
    (tmp_path / "data.txt").write_text("0110" * 500)
    assert run("infer", "--sequence", tmp_path / "data.txt", "--L", 1) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["process"] == "external" and row["cq_exact"] == "" and row["seed"] == ""


def test_infer_refuses_large_dimension(tmp_path):
    assert run("infer", "--process", "fair-coin", "--N", 10**5, "--seed", 2, "--L", 13) == cli.EXIT_DATA


# -- exact ----------------------------------------------------------------------

def exact_json(capsys, *argv):
    assert run("exact", *argv) == 0
    return json.loads(capsys.readouterr().out)


def test_exact_perturbed_coin(capsys):
    data = exact_json(capsys, "--process", "perturbed-coin", "--param", "q0=0.3", "--param", "q1=0.3")
    assert data["cmu"] == pytest.approx(1.0, abs=1e-12)


def test_exact_nemo(capsys):
    data = exact_json(capsys, "--process", "nemo", "--param", "p=0.1", "--param", "q=0.9")
    assert data["cmu"] == pytest.approx(1.583, abs=1e-3)
    assert data["cq"] < data["cmu"]


def test_exact_fair_coin(capsys, tmp_path):
    out = tmp_path / "exact.json"
    cfg = write_config(tmp_path, process={"name": "fair-coin"})
    assert run("exact", "--config", cfg, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["cmu"] == 0.0 and data["cq"] == 0.0 and data["dq"] == 0.0


def test_exact_machine_file(tmp_path, capsys):
    defn = {"name": "orth", "alphabet": ["a", "b", "c"], "states": ["A", "B"],
            "edges": [["A", "a", "A", 0.5], ["A", "b", "B", 0.5], ["B", "c", "A", 1.0]]}
    (tmp_path / "m.json").write_text(json.dumps(defn))
    cfg = write_config(tmp_path, machine_file="m.json")
    data = exact_json(capsys, "--config", cfg)
    assert data["cq"] == pytest.approx(data["cmu"], abs=1e-10)


# -- emo ------------------------------------------------------------------------

def test_emo_golden_mean(tmp_path, capsys):
    out = tmp_path / "emo.csv"
    cfg = write_config(tmp_path, process=GOLDEN, N=10**6, delta=0.01, seed=4)
    assert run("emo", "--config", cfg, "--out", out) == 0
    assert "R_eff = 3" in capsys.readouterr().err
    rows = read_csv(out)
    assert list(rows[0]) == ["r", "statistic", "skipped_mass"]
    assert len(rows) == 9


def test_emo_nemo_short(capsys):
    assert run("emo", "--process", "nemo", "--param", "p=0.1", "--param", "q=0.9",
               "--N", 10**4, "--seed", 4, "--r-max", 8) == 0
    assert "threshold never crossed" in capsys.readouterr().err


# -- sweep and perturb ------------------------------------------------------------

def test_sweep_rows(tmp_path):
    cfg = write_config(tmp_path, process=GOLDEN, L=[1, 2, 3], N=[2000, 5000], trials=2, seed=9, r_max=4)
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--config", cfg, "--out", out, "--threads", 2) == 0
    rows = read_csv(out)
    assert len(rows) == 3 * 2 * 2
    first = out.read_bytes()
    assert run("sweep", "--config", cfg, "--out", out) == 0
    assert out.read_bytes() == first


def test_perturb_weyl(tmp_path):
    cfg = write_config(tmp_path, process=GOLDEN, seed=1, perturb={"mode": "weyl", "epsilons": [1e-4, 1e-3]})
    out = tmp_path / "weyl.csv"
    assert run("perturb", "--config", cfg, "--out", out) == 0
    rows = read_csv(out)
    assert [r["pass"] for r in rows] == ["true", "true"]


def test_perturb_scaling(tmp_path):
    cfg = write_config(tmp_path, process=GOLDEN, seed=1, N=[2000, 20000, 200000], trials=3,
                       perturb={"mode": "scaling", "L": 3})
    out = tmp_path / "scaling.csv"
    assert run("perturb", "--config", cfg, "--out", out) == 0
    rows = read_csv(out)
    assert len(rows) == 3 and list(rows[0]) == ["L", "N", "trials", "mean_abs_error", "std_error", "slope", "slope_se"]


# -- exit codes ------------------------------------------------------------------

def test_exit_codes(tmp_path, monkeypatch):
    assert run("exact", "--process", "not-a-process") == cli.EXIT_CONFIG
    assert run("exact", "--process", "nemo", "--param", "p=0.1") == cli.EXIT_CONFIG
    assert run("sweep", "--process", "fair-coin", "--L", 1, "--N", 100) == cli.EXIT_CONFIG  # no seed
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("exact", "--config", bad) == cli.EXIT_CONFIG
    assert run("emo", "--sequence", tmp_path / "missing.txt") == cli.EXIT_DATA
    assert run("exact", "--process", "golden-mean-3-2", "--param", "p=1.5") == cli.EXIT_DATA

    def diverge(*args, **kwargs):
        raise NoConvergence("stuck")

    monkeypatch.setattr(cli, "exact_report", diverge)
    assert run("exact", "--process", "fair-coin") == cli.EXIT_NUMERICAL


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
