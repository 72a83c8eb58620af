from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from ecskit import cli
from ecskit import d1family as D1
from ecskit import d2family as D2
from ecskit import riccati as R


def run(*argv):
    return cli.main(list(argv))


def test_verify_d1_default(tmp_path):
    out = tmp_path / "d1.json"
    assert run("verify-d1", "--n", "4", "--out", str(out)) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["reports"][0]["classification"] == "ECS, d=1"


def test_verify_d1_sine_stdout(capsys):
    assert run("verify-d1", "--fixture", "sine", "--grid", "2") == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"]


def test_verify_d1_constant_f_is_locally_symmetric(tmp_path):
    out = tmp_path / "c.json"
    assert run("verify-d1", "--fixture", "constant", "--grid", "2", "--out", str(out)) == cli.EXIT_OK
    assert json.loads(out.read_text())["reports"][0]["classification"] == "locally symmetric"


def test_corrupted_A_is_invalid(tmp_path):
    d = D1.sine_example(4).to_dict()
    d["A"] = [[1.0, 0.0], [0.0, 0.5]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    assert run("verify-d1", "--fixture", str(path)) == cli.EXIT_INVALID


def test_d1_json_fixture(tmp_path):
    path = tmp_path / "ok.json"
    path.write_text(json.dumps(D1.sine_example(4).to_dict()))
    assert run("verify-d1", "--fixture", str(path), "--grid", "2", "--out", str(tmp_path / "r.json")) == cli.EXIT_OK


def test_malformed_and_missing_files(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert run("verify-d1", "--fixture", str(path)) == cli.EXIT_INVALID
    assert run("verify-d1", "--fixture", str(tmp_path / "nope.json")) == cli.EXIT_INVALID
    path.write_text(json.dumps({"f": {"family": "trig"}}))
    assert run("verify-d1", "--fixture", str(path)) == cli.EXIT_INVALID


def test_verify_d2_flat(tmp_path):
    out = tmp_path / "d2.json"
    assert run("verify-d2", "--fixture", "flat", "--grid", "2", "--out", str(out)) == cli.EXIT_OK
    assert json.loads(out.read_text())["classification"] == "locally symmetric"


def test_verify_d2_nonflat(tmp_path, nonflat4):
    out = tmp_path / "d2.json"
    assert run("verify-d2", "--grid", "2", "--out", str(out)) == cli.EXIT_OK
    assert json.loads(out.read_text())["classification"] == "ECS, d=2"


def test_missing_phi_is_invalid(tmp_path):
    d = D2.flat_fixture().to_dict()
    d["phi"] = None
    path = tmp_path / "nophi.json"
    path.write_text(json.dumps(d))
    assert run("verify-d2", "--fixture", str(path)) == cli.EXIT_INVALID


@pytest.mark.parametrize("fixture", ["d1", "flat", "d2-flat"])
def test_olszak(fixture, tmp_path):
    out = tmp_path / "o.json"
    assert run("olszak", "--fixture", fixture, "--out", str(out)) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["dimensions"] == [doc["expected"]]


def test_riccati(tmp_path):
    out = tmp_path / "r.json"
    assert run("riccati", "--out", str(out)) == cli.EXIT_OK
    doc = json.loads(out.read_text())
    np.testing.assert_allclose(doc["roots"], R.roots_of_P(5, 6).as_array(), rtol=1e-14)
    assert max(doc["residuals"]) < R.RESIDUAL_TOL


@pytest.mark.parametrize("cmd", ["riccati", "certify", "plotdata"])
def test_invalid_kl_exit_code(cmd):
    assert run(cmd, "--k", "4", "--l", "5") == cli.EXIT_INVALID
    assert run(cmd, "--k", "5", "--l", "7") == cli.EXIT_INVALID


def test_bad_arguments():
    assert run("riccati", "--period", "-1") == cli.EXIT_INVALID
    assert run("nonsense") == cli.EXIT_INVALID


def test_certify_writes_stable_file(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("certify", "--out", str(a)) == cli.EXIT_OK
    assert run("certify", "--out", str(b)) == cli.EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["verdict"] == "pass"


def test_plotdata(tmp_path):
    assert run("plotdata", "--out", str(tmp_path)) == cli.EXIT_OK
    with open(tmp_path / "septuple.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "alpha", "beta", "gamma", "f"]
    assert len(rows) == 1 + R.GRID
    sept = R.solve_septuple(R.roots_of_P(5, 6), 1.0)
    table = np.array(rows[1:], dtype=float)
    t = table[:, 0]
    np.testing.assert_allclose(t, np.arange(R.GRID) / R.GRID)
    for col, name in enumerate(("alpha", "beta", "gamma", "f"), start=1):
        np.testing.assert_allclose(table[:, col], getattr(sept, name)(t), atol=1e-12)
    with open(tmp_path / "residuals.csv") as fh:
        res = list(csv.reader(fh))
    assert res[0] == ["t", "r_alpha", "r_beta", "r_gamma"] and len(res) == 1 + R.GRID
    assert np.abs(np.array(res[1:], dtype=float)[:, 1:]).max() < R.RESIDUAL_TOL
