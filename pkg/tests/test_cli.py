from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import pytest

from diracspec.cli import main

COS_SIN = {"p": [{"interval": [0, "pi"], "poly": [1], "trig": {"kind": "cos", "k": 1}}],
           "q": [{"interval": [0, "pi"], "poly": [1], "trig": {"kind": "sin", "k": 1}}]}
COS_X = {"p": COS_SIN["p"], "q": [{"interval": [0, "pi"], "poly": [0, 1]}]}


@pytest.fixture
def write(tmp_path):
    def _write(data, name="cfg.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)
    return _write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(write, capsys):
    code, out, _ = run(["classify", "--config", write({"boundary": [[1, 0, 0, 1], [0, 1, 1, 0]]})], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["kind"] == "DEGENERATE_BOTH" and doc["theorem1_applicable"] is True
    assert doc["minors"]["J13"] == [1.0, 0.0] and doc["J0"] == [0.0, 0.0]
    code, out, _ = run(["--config", write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]]}), "classify"], capsys)
    assert code == 0 and json.loads(out)["kind"] == "NONDEGENERATE"


def test_classify_complex_entries(write, capsys):
    code, out, _ = run(["classify", "--config", write({"boundary": [[1, 0, 0, [0, 2]], [0, 1, [0, 2], 0]]})], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["J0"] == [5.0, 0.0]


def test_rank_deficient_exit(write, capsys):
    code, _, err = run(["classify", "--config", write({"boundary": [[1, 2, 0, 0], [2, 4, 0, 0]]})], capsys)
    assert code == 3 and "rank" in err


def test_schema_violation_names_field(write, capsys):
    code, _, err = run(["classify", "--config", write({"boundary": [[1, 0, 0, 2], [0, 1, 2]]})], capsys)
    assert code == 2 and "$.boundary[1]" in err
    code, _, err = run(["classify", "--config", write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "grid_n": 0})], capsys)
    assert code == 2 and "$.grid_n" in err
    code, _, err = run(["classify", "--config", write('{"boundary": [[1, 0,\n 0 2]]}')], capsys)
    assert code == 2 and "line 2" in err


def test_bad_potential_and_box(write, capsys):
    bad_pot = {"boundary": [[1, 0, 0, 0], [0, 1, 0, 0]],
               "potential": {"p": [{"interval": [0, 1], "poly": [1]}]}}
    code, _, err = run(["det-sample", "--config", write(bad_pot)], capsys)
    assert code == 2 and "$.potential" in err
    bad_box = {"boundary": [[1, 0, 0, 0], [0, 1, 0, 0]], "box": {"re_lo": 1, "re_hi": 0, "im_lo": 0, "im_hi": 1}}
    code, _, err = run(["det-sample", "--config", write(bad_box)], capsys)
    assert code == 2 and "$.box" in err


def test_missing_config(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify"])
    assert exc.value.code == 2


def _rows(text):
    r = list(csv.reader(text.splitlines()))
    assert r[0] == ["re_lambda", "im_lambda", "re_delta", "im_delta"]
    return [[float(v) for v in row] for row in r[1:]]


def test_det_sample_theorem1(write, capsys):
    cfg = write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "potential": COS_SIN, "grid_n": 3})
    code, out, _ = run(["det-sample", "--config", cfg], capsys)
    rows = _rows(out)
    assert code == 0 and len(rows) == 9
    assert [r[:2] for r in rows[:3]] == [[-5.0, -5.0], [-5.0, 0.0], [-5.0, 5.0]]
    assert all(abs(r[2] + 3) < 1e-8 and abs(r[3]) < 1e-8 for r in rows)


def test_det_sample_dirichlet_and_center(write, tmp_path, capsys):
    cfg = write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]],
                 "box": {"re_lo": 0, "re_hi": 1, "im_lo": -1, "im_hi": 1}, "grid_n": 3})
    out_path = tmp_path / "grid.csv"
    code, out, _ = run(["det-sample", "--config", cfg, "--out", str(out_path)], capsys)
    assert code == 0 and out == ""
    rows = _rows(out_path.read_text())
    half = [r for r in rows if r[0] == 0.5 and r[1] == 0.0]
    assert len(half) == 1 and abs(half[0][2] + 1) < 1e-10
    cfg1 = write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]],
                  "box": {"re_lo": 0, "re_hi": 1, "im_lo": -1, "im_hi": 1}, "grid_n": 1}, "one.json")
    code, out, _ = run(["det-sample", "--config", cfg1], capsys)
    rows = _rows(out)
    assert len(rows) == 1 and rows[0][:2] == [0.5, 0.0] and abs(rows[0][2] + 1) < 1e-10


def test_det_sample_deterministic(write, capsys):
    cfg = write({"boundary": [[1, 0.5, 0, 2], [0, 1, -1, 0.3]], "potential": COS_X, "grid_n": 4})
    first = run(["det-sample", "--config", cfg], capsys)[1]
    second = run(["det-sample", "--config", cfg], capsys)[1]
    assert first == second


def test_det_sample_failure_gives_nan(write, capsys):
    cfg = write({"boundary": [[1, 0, 0, 0], [0, 1, 0, 0]], "potential": COS_SIN, "grid_n": 2,
                 "tolerances": {"max_steps": 3, "precision": "double"}})
    code, out, err = run(["det-sample", "--config", cfg], capsys)
    rows = _rows(out)
    assert code == 4 and len(rows) == 4
    assert all(math.isnan(r[2]) and math.isnan(r[3]) for r in rows)
    assert "NaN" in err


def test_det_sample_json(write, capsys):
    cfg = write({"boundary": [[1, 0, 0, 0], [0, 1, 0, 0]], "grid_n": 2})
    code, out, _ = run(["det-sample", "--config", cfg, "--json"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc) == 4 and all(abs(r["delta"][0] - 1) < 1e-12 for r in doc)


def test_spectrum_dirichlet(write, capsys):
    cfg = write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]],
                 "box": {"re_lo": 0.5, "re_hi": 3.5, "im_lo": -1, "im_hi": 1}})
    code, out, _ = run(["spectrum", "--config", cfg], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "FINITE_LIST"
    assert [round(e["re"], 9) for e in doc["eigenvalues"]] == [1.0, 2.0, 3.0]
    assert all(e["mult"] == 1 for e in doc["eigenvalues"]) and len(doc["residuals"]) == 3


def test_spectrum_degenerate_verdicts(write, capsys):
    b1 = write({"boundary": [[1, 0, 0, 1], [0, 1, 1, 0]], "potential": COS_SIN}, "b1.json")
    code, out, _ = run(["spectrum", "--config", b1], capsys)
    assert code == 5 and json.loads(out)["verdict"] == "IDENTICALLY_ZERO"
    b2 = write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "potential": COS_SIN,
                "box": {"re_lo": -2, "re_hi": 2, "im_lo": -2, "im_hi": 2}}, "b2.json")
    code, out, _ = run(["spectrum", "--config", b2], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "EMPTY_IN_BOX" and doc["eigenvalues"] == []


def test_spectrum_retries_contour(write, capsys):
    # the right edge passes through the eigenvalue 2; a 1% dilation moves it off
    cfg = write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]],
                 "box": {"re_lo": 0.5, "re_hi": 2.0, "im_lo": -1, "im_hi": 1}})
    code, out, err = run(["spectrum", "--config", cfg], capsys)
    doc = json.loads(out)
    assert code == 0 and "dilating" in err
    assert [round(e["re"], 9) for e in doc["eigenvalues"]] == [1.0, 2.0]


def test_verify_commands(write, capsys):
    thm = write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "potential": COS_SIN, "grid_n": 3}, "t.json")
    code, out, _ = run(["verify", "--config", thm, "--what", "theorem1"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and doc["max_deviation"] <= 1e-8
    code, out, _ = run(["verify", "--what", "relations13", "--config", thm], capsys)
    assert code == 0 and json.loads(out)["pass"]
    bad = write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "potential": COS_X, "grid_n": 2}, "b.json")
    code, out, _ = run(["verify", "--config", bad, "--what", "remark2"], capsys)
    doc = json.loads(out)
    assert code == 7 and doc["hypothesis_violated"] == "symmetry"
    dirichlet = write({"boundary": [[1, 0, 0, 0], [0, 0, 1, 0]], "potential": COS_SIN, "grid_n": 2}, "d.json")
    code, out, _ = run(["verify", "--config", dirichlet], capsys)
    assert code == 7 and json.loads(out)["hypothesis_violated"] == "boundary"


def test_verify_fail_exit(write, capsys):
    # tolerances far too loose to resolve the relations at 1e-9
    loose = write({"boundary": [[1, 0, 0, 2], [0, 1, 2, 0]], "potential": COS_SIN, "grid_n": 2,
                   "tolerances": {"rel_tol": 1e-3, "abs_tol": 1e-3, "wronskian_tol": 1.0,
                                  "precision": "double"}})
    code, out, _ = run(["verify", "--config", loose, "--what", "theorem1"], capsys)
    assert code == 6 and json.loads(out)["pass"] is False


def test_prove(capsys):
    code, out, _ = run(["prove"], capsys)
    assert code == 0
    assert "theorem1 identity: PASS, normal form J12+J34" in out
    assert "a11*a22 - a12*a21 + a13*a24 - a14*a23" in out


def test_prove_ablation(capsys):
    code, out, _ = run(["prove", "--skip-wronskian"], capsys)
    assert code == 8 and "FAIL" in out
    residual = [l for l in out.splitlines() if l.startswith("residual:")][0]
    assert residual != "residual: 0"


def test_prove_delta0_json(capsys):
    code, out, _ = run(["prove", "--emit-delta0", "--json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["theorem1_identity"] == "PASS"
    assert doc["delta0"]["constant"] == "a11*a22 - a12*a21 + a13*a24 - a14*a23"
    assert doc["delta0"]["cos"] == "a11*a24 - a12*a23 + a13*a22 - a14*a21"
    assert doc["delta0"]["sin"] == "-a11*a23 - a12*a24 + a13*a21 + a14*a22"
    assert doc["delta0"]["matches_minors"] is True


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "diracspec", "prove"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
