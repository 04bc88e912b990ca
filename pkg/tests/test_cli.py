import csv
import io
import json

import pytest

from nonembed import cli
from nonembed.sampling import DEFAULT_SEED_ENV


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_quotient_repetition_code(capsys):
    code, out, _ = run(capsys, "quotient", "--code", "fixtures/rep4.json", "--bound")
    rep = json.loads(out)
    assert code == 0 and rep["pass"]
    assert rep["results"]["theorem_code_bound"] == 0.5
    assert rep["results"]["lp"] == "1"
    assert rep["params"]["seed"] == 0


def test_edit_average(capsys):
    code, out, _ = run(capsys, "edit", "--avg", "-d", "64", "--samples", "10000", "--seed", "7")
    rep = json.loads(out)
    assert code == 0
    r = rep["results"]
    assert r["bound"] == 0.4 and r["mean"] - r["ci99"] >= 0.4
    assert rep["params"]["seed"] == 7 and rep["params"]["samples"] == 10000


def test_edit_csv_schema(capsys):
    code, out, _ = run(capsys, "edit", "--tau", "--d", "32", "--samples", "500", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert tuple(rows[0]) == cli.EDIT_CSV
    assert rows[1][0] == "32" and rows[1][1] == "0.125"


def test_generic_csv(capsys):
    code, out, _ = run(capsys, "length", "--cube", "4", "--trials", "3", "--format", "csv")
    rows = dict(csv.reader(io.StringIO(out)))
    assert code == 0 and rows["pass"] == "True"
    assert float(rows["results.length"]) == 2.0


def test_bad_input_exit_two(capsys):
    assert run(capsys, "quotient", "--code", "does/not/exist.json")[0] == 2
    assert run(capsys, "length")[0] == 2
    assert run(capsys, "sensitivity", "--function", "majority", "--d", "4")[0] == 2
    with pytest.raises(SystemExit):
        cli.build_parser()[0].parse_args(["nope"])
    assert run(capsys, "nope")[0] == 2


def test_failure_witness_serialized(capsys, monkeypatch):
    def failing(args):
        return {"value": 2}, {"counterexample": [1, 2]}

    monkeypatch.setitem(cli.COMMANDS, "code", failing)
    code, out, _ = run(capsys, "code")
    rep = json.loads(out)
    assert code == 1 and rep["pass"] is False
    assert rep["witness"] == {"counterexample": [1, 2]}


def test_config_file_overridden_by_flags(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsamples = 300\nd = 16\nseed = 5\n")
    code, out, _ = run(capsys, "edit", "--config", str(cfg), "--seed", "9")
    rep = json.loads(out)
    assert code == 0
    assert rep["params"]["samples"] == 300 and rep["params"]["d"] == 16 and rep["params"]["seed"] == 9


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "edit", "--config", str(cfg))[0] == 2


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv(DEFAULT_SEED_ENV, "42")
    code, out, _ = run(capsys, "edit", "--d", "16", "--samples", "200")
    assert json.loads(out)["params"]["seed"] == 42


def test_every_report_names_its_statement(capsys):
    for argv in (["fourier", "--d", "4", "--trials", "3"], ["code"], ["certify", "--metric", "fixtures/k23.json"],
                 ["emd", "--metric", "fixtures/c5.json", "--sigma", "1,0,0,0,0", "--tau", "0,0,1/2,1/2,0"],
                 ["torus", "--builtin", "z2", "--samples", "500", "--trials", "50", "--embed-samples", "128"],
                 ["sensitivity", "--function", "tribes", "--d", "6"]):
        code, out, _ = run(capsys, *argv)
        rep = json.loads(out)
        assert code == 0, rep
        assert rep["statement"] == cli.STATEMENTS[argv[0]]


def test_emd_measures(capsys):
    code, out, _ = run(capsys, "emd", "--metric", "fixtures/c5.json", "--sigma", "1,0,0,0,0",
                       "--tau", "0,0,1/2,1/2,0")
    assert json.loads(out)["results"]["cost"] == "2"


def test_thread_count_does_not_change_output(capsys):
    argv = ["torus", "--builtin", "d4", "--samples", "3000", "--trials", "100", "--embed-samples", "256"]
    _, one, _ = run(capsys, *argv, "--threads", "1")
    _, three, _ = run(capsys, *argv, "--threads", "3")
    assert one == three
