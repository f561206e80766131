import csv
import io
import json
import subprocess
import sys

import pytest

from lyadim import cli, verify
from lyadim.verify import CriterionResult


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_systems_listing(capsys):
    code, out, _ = run(capsys, "systems", "--json")
    assert code == 0
    ids = [r["id"] for r in json.loads(out)]
    assert "lorenz" in ids and "henon" in ids and "linear" not in ids
    code, out, _ = run(capsys, "systems")
    assert code == 0 and "lorenz" in out


def test_les_csv(capsys):
    code, out, _ = run(capsys, "les", "--system", "lorenz", "--n-factors", "500")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "LE1", "LE2", "LE3", "j", "s", "d", "units"]
    assert float(rows[1][0]) == pytest.approx(50.0)
    assert rows[1][-1] == "1/time"


def test_les_byte_identical(capsys):
    argv = ("les", "--system", "henon", "--n-factors", "2000", "--seed", "0.1,0.1")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    assert "1/iteration" in a


def test_exact_json(capsys):
    code, out, _ = run(capsys, "exact", "--system", "lorenz")
    rep = json.loads(out)
    assert code == 0 and rep["outcome"] == "formula"
    assert rep["value"] == pytest.approx(2.4013128, abs=1e-7)
    code, out, _ = run(capsys, "exact", "--system", "glukhovsky_dolzhansky")
    rep = json.loads(out)
    assert rep["value"] == pytest.approx(2.8917676, abs=1e-7)
    assert rep["params"]["mapped_r"] == pytest.approx(700.0)


def test_config_file_and_flag_override(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"system": "lorenz", "params": {"r": 0.5}}))
    _, out, _ = run(capsys, "exact", "--config", str(conf))
    assert json.loads(out)["outcome"] == "not_applicable"
    _, out, _ = run(capsys, "exact", "--config", str(conf), "--params", "r=28")
    assert json.loads(out)["outcome"] == "formula"


def test_output_file(tmp_path, capsys):
    target = tmp_path / "rep.json"
    code, out, _ = run(capsys, "exact", "--system", "henon", "-o", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["theorem"] == "henon"


@pytest.mark.parametrize("argv", [
    ("exact",),
    ("exact", "--system", "nope"),
    ("exact", "--system", "lorenz", "--params", "sigma=-1"),
    ("exact", "--system", "lorenz", "--params", "sigma"),
    ("les", "--system", "lorenz", "--seed", "1,2"),
    ("les", "--system", "henon", "--seg-len", "1.5"),
    ("les", "--system", "lorenz", "--rel-tol", "0"),
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_schema_violation_exit_2(tmp_path, capsys):
    conf = tmp_path / "bad.json"
    conf.write_text(json.dumps({"system": "lorenz", "n_factors": 0}))
    code, _, err = run(capsys, "les", "--config", str(conf))
    assert code == 2 and "n_factors" in err
    conf.write_text(json.dumps({"system": "lorenz", "colour": "red"}))
    assert run(capsys, "les", "--config", str(conf))[0] == 2
    conf.write_text("{not json")
    assert run(capsys, "les", "--config", str(conf))[0] == 2


def test_numeric_failure_exit_3(capsys):
    code, _, err = run(capsys, "sweep", "--system", "henon", "--seed", "3,3", "--transient", "5",
                       "--sample-time", "5", "--sample-every", "1")
    assert code == 3 and "unbounded" in err
    code, _, err = run(capsys, "les", "--system", "lorenz", "--seed", "nan,0,0",
                       "--n-factors", "5")
    assert code == 3


SWEEP = ("sweep", "--system", "lorenz", "--transient", "10", "--sample-time", "20",
         "--sample-every", "0.01", "--grid", "3", "--n-factors", "200", "--no-classify")


def test_sweep_report_and_side_files(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "t.csv", tmp_path / "a.svg"
    code, out, _ = run(capsys, *SWEEP, "--csv", str(csv_path), "--svg", str(svg_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["settings"]["seg_len"] == 0.1
    assert rep["horizon"] == pytest.approx(20.0)
    assert len(rep["points"]) == 3
    assert rep["max"]["ky"]["d"] == max(p["ky"]["d"] for p in rep["points"])
    assert rep["classification"]["kind"] == "pending"
    assert len(csv_path.read_text().splitlines()) == 4
    assert svg_path.read_text().startswith("<svg")


def test_sweep_deterministic_across_jobs(capsys):
    _, a, _ = run(capsys, *SWEEP)
    _, b, _ = run(capsys, *SWEEP, "--jobs", "2")
    assert a == b


def test_sweep_single_point_matches_les(capsys):
    _, out, _ = run(capsys, *SWEEP[:-1], "--grid", "1", "--no-classify")
    rep = json.loads(out)
    point = ",".join(repr(x) for x in rep["points"][0]["point"])
    _, les, _ = run(capsys, "les", "--system", "lorenz", f"--seed={point}", "--n-factors", "200")
    row = list(csv.reader(io.StringIO(les)))[1]
    assert [float(x) for x in row[1:4]] == pytest.approx(rep["max"]["les"], rel=1e-12)


def test_verify_exit_codes(monkeypatch, capsys):
    ok = [CriterionResult(1, "x", True, "e", "o")]
    monkeypatch.setattr(verify, "run_all", lambda fast=False: ok)
    code, out, _ = run(capsys, "verify", "--fast")
    assert code == 0 and "PASS" in out
    bad = ok + [CriterionResult(2, "y", False, "e", "o")]
    monkeypatch.setattr(verify, "run_all", lambda fast=False: bad)
    code, out, _ = run(capsys, "verify", "--json")
    assert code == 4 and [r["passed"] for r in json.loads(out)] == [True, False]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "lyadim", "systems"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "henon" in res.stdout
