import json

import jsonschema
import pytest

from fusionassoc.cli import load_schema, main

J2 = {"r": 2, "z0": [0, 0], "radius": "inf", "mode": "exact",
      "coeffs": [[[["1/3", "0"], ["1", "0"]], [["0", "0"], ["1/3", "0"]]]]}


@pytest.fixture(scope="module")
def schema():
    return load_schema()


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_fuchsian_solve_exact(tmp_path, schema):
    src = write(tmp_path / "sys.json", J2)
    rep = tmp_path / "rep.json"
    out = tmp_path / "sol.json"
    assert main(["fuchsian", "solve", "--input", src, "--mode", "exact",
                 "--report", str(rep), "--out", str(out)]) == 0
    doc = json.loads(rep.read_text())
    jsonschema.validate(doc, schema)
    assert doc["passed"]
    assert doc["result"]["residual"] == 0
    assert json.loads(out.read_text())["mode"] == "exact"


def test_series_eval(tmp_path, schema):
    series = {"variable": "z", "M_max": 2, "K_max": 2, "mode": "exact", "truncated": False,
              "bases": [["1/2", "0"]],
              "terms": [{"base": 0, "offset": 0, "logpow": 0, "re": "1", "im": "0"}]}
    src = write(tmp_path / "s.json", series)
    rep = tmp_path / "r.json"
    assert main(["series", "eval", "--input", src, "--at", "4", "--out", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    jsonschema.validate(doc, schema)
    assert doc["result"]["value"][0] == pytest.approx(2.0)


def test_reduce_and_connection_matrix(tmp_path, capsys, schema):
    mod = write(tmp_path / "mod.json", {"type": "fock", "momentum": "1/2", "grade_cutoff": 8})
    quad = write(tmp_path / "q.json", {"theta": [1], "v": [2], "u": [1], "w": []})
    assert main(["reduce", "--module-config", mod, "--quadruple", quad, "--flavor", "y", "--N", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    jsonschema.validate(doc, schema)
    assert doc["result"]["flavor"] == "y"
    cm = tmp_path / "cm.json"
    assert main(["connection-matrix", "--module-config", mod, "--basepoint", "4", "--mode", "exact",
                 "--order", "2", "--N", "0", "--out", str(cm)]) == 0
    system = json.loads(cm.read_text())
    assert system["r"] == 8
    assert main(["fuchsian", "solve", "--input", str(cm), "--order", "4"]) == 0


def test_assoc_check_csv(tmp_path, schema):
    pts = write(tmp_path / "p.json", [[7, 4], [[7.1, 0.2], [4, -0.1]]])
    rep, csv = tmp_path / "a.json", tmp_path / "a.csv"
    assert main(["assoc-check", "--points", pts, "--G-max", "8", "--order", "16",
                 "--report", str(rep), "--csv", str(csv)]) == 0
    doc = json.loads(rep.read_text())
    jsonschema.validate(doc, schema)
    assert doc["passed"]
    assert len(csv.read_text().strip().splitlines()) == 3


def test_pentagon_with_config(tmp_path, schema):
    cfg = write(tmp_path / "cfg.json", {"tol": 1e-3, "G": 4})
    rep = tmp_path / "p.json"
    assert main(["pentagon-check", "--config", cfg, "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    jsonschema.validate(doc, schema)
    assert doc["result"]["tolerance"] == 1e-3
    assert main(["pentagon-check", "--config", cfg, "--tol", "1e-4", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["result"]["tolerance"] == 1e-4


def test_exit_codes(tmp_path):
    empty = write(tmp_path / "e.json", [])
    assert main(["assoc-check", "--points", empty]) == 2
    assert main(["pentagon-check", "--point", "7,4,6"]) == 3
    assert main(["assoc-check", "--points", str(tmp_path / "missing.json")]) == 2
    assert main(["no-such-command"]) == 2
    bad = write(tmp_path / "bad.json", {"r": 3, "coeffs": [[[[0, 0]]]]})
    assert main(["fuchsian", "solve", "--input", bad]) == 2
    src = write(tmp_path / "sys.json", J2)
    assert main(["fuchsian", "solve", "--input", src, "--order", "-1"]) == 1


def test_report_is_deterministic(tmp_path):
    r1, r2 = tmp_path / "1.json", tmp_path / "2.json"
    for r in (r1, r2):
        main(["pentagon-check", "--G", "4", "--seed", "3", "--report", str(r)])
    assert r1.read_text() == r2.read_text()
