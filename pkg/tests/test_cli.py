import csv
import io
import json
from pathlib import Path

import pytest

from kn_fermion.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_scalar_basis_genus0(capsys):
    code, out, _ = run(capsys, "scalar-basis", "--range", "-2..2")
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "pass"
    assert rep["structure_constants"]["-1,2"] == {"1": 1}


def test_negative_range_is_not_an_option(capsys):
    code, out, _ = run(capsys, "wedge", "verify-commutators", "--range", "-2..2")
    assert code == 0 and json.loads(out)["ok"]


def test_vector_basis_and_action_with_table(capsys, tmp_path):
    code, out, _ = run(capsys, "vector-basis", "--range", "-2..2", "--rank", "2")
    assert code == 0
    rep = json.loads(out)
    table = tmp_path / "table.json"
    table.write_text(json.dumps(rep["constants"]))
    code, out, _ = run(capsys, "action", "--rep", "sl2:2", "--element", "h@1", "--window=-4..3",
                       "--ctable", str(table))
    assert code == 0
    assert json.loads(out)["status"] == "pass"
    # corrupt one constant: the representation check must fail and name a commutator
    doc = rep["constants"]
    for row in doc["entries"]:
        if (row["m"], row["n"], row["j"], row["k"], row["jp"]) == (-1, 1, 0, 0, 0):
            row["value"] = "2"
    table.write_text(json.dumps(doc))
    code, out, err = run(capsys, "action", "--rep", "sl2:2", "--element", "h@1", "--window=-4..3",
                         "--ctable", str(table))
    assert code == 1 and "FAIL" in err and "@" in err
    assert json.loads(out)["status"] == "fail"


def test_json_output_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["vector-basis", "--range", "0..1", "--rank", "2", "--curve", str(CONFIGS / "genus1.json"),
                     "--emit", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_output(capsys):
    code, out, _ = run(capsys, "scalar-basis", "--range", "0..2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["check"] == "A_0 leading coefficient" and rows[-1]["check"] == "quasigrading"


def test_vacuum_weight_genus1(capsys):
    code, out, _ = run(capsys, "wedge", "vacuum-weight", "--curve", str(CONFIGS / "genus1.json"),
                       "--m", "-1", "--M", "-3")
    assert code == 0
    rep = json.loads(out)
    assert rep["rows"][0]["deviation"] < 1e-7


def test_equiv_check(capsys):
    code, out, _ = run(capsys, "equiv", "check", "--rep", "sl2:2", "--gamma", "[[2,1],[1,1]]", "--window", "10")
    assert code == 0
    assert json.loads(out)["intertwining"]["max_deviation"] == 0


@pytest.mark.parametrize("argv", [
    ["scalar-basis", "--range", "3..1"],
    ["scalar-basis", "--range", "x"],
    ["scalar-basis", "--range", "0..1", "--curve", "/nonexistent.json"],
    ["equiv", "check", "--rep", "sl2:2", "--gamma", "[[1,0,0],[0,1,0],[0,0,1]]"],
    ["action", "--rep", "sl2:2", "--element", "q@1", "--window", "0..2"],
    ["action", "--rep", "sl2:3", "--element", "h@1", "--window", "0..2", "--rank", "2"],
    ["scalar-basis", "--range", "0..1", "--tol", "-1"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_tolerance_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("KN_FERMION_TOL", "abc")
    assert run(capsys, "scalar-basis", "--range", "0..1")[0] == 2
    monkeypatch.setenv("KN_FERMION_TOL", "1e-9")
    assert run(capsys, "scalar-basis", "--range", "0..1")[0] == 0


@pytest.mark.parametrize("rank", ["1", "2", "3"])
def test_full_suite_genus0(capsys, rank):
    code, out, _ = run(capsys, "full-suite", "--rank", rank)
    assert code == 0, out
    assert json.loads(out)["summary"]["failed"] == 0


def test_ctable_accepts_whole_report(capsys, tmp_path):
    code, out, _ = run(capsys, "vector-basis", "--range", "-1..1", "--rank", "2")
    report = tmp_path / "report.json"
    report.write_text(out)
    code, out, _ = run(capsys, "action", "--rep", "sl2:2", "--element", "e@0", "--window=-2..2",
                       "--ctable", str(report))
    assert code == 0 and json.loads(out)["status"] == "pass"
