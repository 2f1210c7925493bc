import csv
import json

import numpy as np
import pytest

from antsel.channel import SystemDims, sample_channel
from antsel.cli import build_parser, main, parse_sweep
from antsel.evaluation import trial_streams
from antsel.ising import parse_qubo, qubo_for_channel


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_sweep():
    assert parse_sweep("0.1:0.9:0.1") == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    assert parse_sweep("0.5,0.7") == (0.5, 0.7)
    with pytest.raises(ValueError):
        parse_sweep("0.9:0.1:0.1")


def test_snr_smoke_and_rerun_identical(tmp_path):
    args = ["snr", "--dims", "2,2,2", "--schemes", "es,rs", "--trials", "10", "--seed", "1",
            "--out", str(tmp_path), "--threads", "1"]
    assert main(args + ["--name", "a"]) == 0
    assert main(args + ["--name", "b", "--threads", "2"]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "trials.csv").read_bytes() == (b / "trials.csv").read_bytes()
    rows = read_csv(a / "trials.csv")
    assert len(rows) == 20 and {r["scheme"] for r in rows} == {"es", "rs"}
    doc = json.loads((a / "summary.json").read_text())
    assert doc["seed"] == 1 and doc["config"]["trials"] == 10


def test_snr_lambda_sweep_rows(tmp_path):
    assert main(["snr", "--dims", "2,2,2", "--schemes", "cim", "--trials", "2", "--anneals", "10",
                 "--steps", "200", "--lambda-sweep", "0.1:0.9:0.1", "--out", str(tmp_path),
                 "--threads", "1"]) == 0
    rows = read_csv(tmp_path / "snr" / "sweep.csv")
    assert [float(r["lambda"]) for r in rows] == pytest.approx([i / 10 for i in range(1, 10)])


def test_capacity_smoke(tmp_path):
    assert main(["capacity", "--dims", "2,2,3", "--schemes", "es,sa,pt", "--trials", "5", "--seed", "7",
                 "--out", str(tmp_path), "--threads", "1", "--power-db", "0"]) == 0
    target = tmp_path / "capacity"
    for s in ("es", "sa", "pt"):
        assert (target / f"cdf_{s}.csv").exists()
    evals = {r["scheme"]: float(r["mean_evaluations"]) for r in read_csv(target / "evaluations.csv")}
    assert evals["es"] == 81 and evals["pt"] == 80_000
    assert json.loads((target / "summary.json").read_text())["config"]["power_db"] == 0.0


def test_qubo_export(tmp_path):
    args = ["qubo-export", "--dims", "2,2,2", "--lambda", "0.8", "--seed", "3", "--out", str(tmp_path)]
    assert main(args) == 0
    first = (tmp_path / "qubo" / "qubo.txt").read_bytes()
    assert main(args) == 0
    assert (tmp_path / "qubo" / "qubo.txt").read_bytes() == first
    text = first.decode()
    assert text.startswith("qubo 8 ")
    rng, _ = trial_streams(3, 0)
    prob = qubo_for_channel(sample_channel(SystemDims(2, 2, 2), rng), 0.8)
    assert np.array_equal(parse_qubo(text), prob.w_matrix)
    side = json.loads((tmp_path / "qubo" / "qubo.json").read_text())
    assert side["dims"] == "2,2,2" and side["lambda"] == 0.8 and side["seed"] == 3
    assert len(side["channel_sha256"]) == 64


def test_cim_trace(tmp_path):
    args = ["cim-trace", "--dims", "2,2,2", "--channels", "2", "--anneals", "20", "--steps", "300",
            "--lambda", "0.5", "--out", str(tmp_path)]
    assert main(args + ["--name", "t1"]) == 0
    assert main(args + ["--name", "t2"]) == 0
    rows = read_csv(tmp_path / "t1" / "trace.csv")
    assert len(rows) == 301 and list(rows[0]) == ["step", "e_rho", "p_c"]
    assert (tmp_path / "t1" / "trace.csv").read_bytes() == (tmp_path / "t2" / "trace.csv").read_bytes()
    assert float(rows[-1]["p_c"]) >= float(rows[0]["p_c"])


def test_config_file_and_flag_override(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text("[experiment]\ndims = 2,2,2\nschemes = es,nsa\ntrials = 3\nseed = 5\n"
                   "[cim]\nanneals = 10\n")
    assert main(["snr", "--config", str(ini), "--trials", "2", "--out", str(tmp_path), "--threads", "1"]) == 0
    doc = json.loads((tmp_path / "snr" / "summary.json").read_text())
    assert doc["config"]["trials"] == 2 and doc["config"]["seed"] == 5
    assert doc["config"]["cim"]["anneals"] == 10


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ANTSEL_OUT", str(tmp_path / "envout"))
    assert main(["snr", "--dims", "1,1,2", "--schemes", "es", "--trials", "1", "--threads", "1"]) == 0
    assert (tmp_path / "envout" / "snr" / "trials.csv").exists()


def test_bad_config_exit_2(tmp_path, capsys):
    assert main(["snr", "--dims", "2,2", "--out", str(tmp_path)]) == 2
    assert main(["snr", "--schemes", "es,bogus", "--out", str(tmp_path)]) == 2
    assert main(["snr", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[cim]\nwarp = 9\n")
    assert main(["snr", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_io_failure_exit_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["qubo-export", "--out", str(blocker)]) == 1


def test_parser_requires_command():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([])
    assert info.value.code == 2
