from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from rnbody.cli import main


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_equilibria_three_body(tmp_path, capsys):
    assert main(["equilibria", "--mu", "0.5", "--out", str(tmp_path)]) == 0
    assert len(rows(tmp_path / "equilibria.csv")) == 5
    assert "3 = 1 + 2: PASS" in capsys.readouterr().out


def test_equilibria_ring_from_config(tmp_path, capsys):
    cfg = tmp_path / "ring.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "ring": {"n": 7, "mu": 10.0}}))
    assert main(["--command", "equilibria", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert len(rows(tmp_path / "equilibria.csv")) == 21
    assert "14 = 7 + 7: PASS" in capsys.readouterr().out


def test_ring_n2_mu0_is_input_error(tmp_path, capsys):
    assert main(["equilibria", "--n", "2", "--mu", "0", "--out", str(tmp_path)]) == 3
    assert "three_body" in capsys.readouterr().err


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["equilibria", "--config", str(bad)]) == 3
    assert main(["equilibria"]) == 3
    assert main([]) == 3
    assert main(["spectrum", "--mu", "0.5", "--alpha", "3.5"]) == 3


def test_spectrum_l4(tmp_path):
    assert main(["spectrum", "--mu", "0.01", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    l4 = [e for e in doc["equilibria"] if e["position"][1] > 0.5][0]
    assert [b["eta"] for b in l4["bifurcations"]] == [1, -1, 1]
    assert [b["symmetry"] for b in l4["bifurcations"]] == ["PlanarZ2", "PlanarZ2", "EightZ2tilde"]
    for e in doc["equilibria"]:
        if e["kind"] == "Saddle":
            assert [b["eta"] for b in e["bifurcations"]] == [-1, -1]


def test_spectrum_above_routh(tmp_path):
    assert main(["spectrum", "--mu", "0.25", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    l4 = [e for e in doc["equilibria"] if e["position"][1] > 0.5][0]
    assert l4["planar_reason"] == "complex"
    assert [b["symmetry"] for b in l4["bifurcations"]] == ["EightZ2tilde"]


def test_branch_ring_origin(tmp_path):
    assert main(["spectrum", "--n", "3", "--mu", "0", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    idx = min(range(len(doc["equilibria"])), key=lambda i: sum(v * v for v in doc["equilibria"][i]["position"]))
    assert main(["branch", "--n", "3", "--mu", "0", "--eq-index", str(idx), "--bif-index", "0",
                 "--max-steps", "10", "--out", str(tmp_path)]) == 0
    loops = json.loads((tmp_path / "branch.json").read_text())["loops"]
    for loop in loops:
        assert all(v[0] == 0 and v[1] == 0 for v in loop["modes_re"])
        assert all(v[0] == 0 and v[1] == 0 for v in loop["modes_im"])
    summary = json.loads((tmp_path / "termination.json").read_text())
    assert summary["termination"]["kind"] == "StepLimit"


def test_branch_l4_eight(tmp_path):
    assert main(["spectrum", "--mu", "0.01", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    idx = next(i for i, e in enumerate(doc["equilibria"]) if e["position"][1] > 0.5)
    assert main(["branch", "--mu", "0.01", "--eq-index", str(idx), "--bif-index", "2",
                 "--max-steps", "8", "--out", str(tmp_path)]) == 0
    for row in rows(tmp_path / "branch.csv"):
        assert float(row["max_abs_z"]) > 0


def test_branch_index_checks(tmp_path):
    assert main(["branch", "--mu", "0.5", "--eq-index", "9", "--out", str(tmp_path)]) == 3
    assert main(["branch", "--mu", "0.5", "--bif-index", "5", "--out", str(tmp_path)]) == 3


def test_ringsum(tmp_path):
    assert main(["ringsum", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "ringsum.csv")
    assert len(table) == 600
    assert max(float(r["rel_err"]) for r in table) < 1e-8


def test_validate_corrupted_ring(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    prims = [{"mass": 1.0, "position": [1.0, 0.0]}, {"mass": 2.0, "position": [-0.5, 0.8660254037844386]},
             {"mass": 1.0, "position": [-0.5, -0.8660254037844386]}]
    cfg.write_text(json.dumps({"alpha": 2.0, "primaries": prims}))
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    out = capsys.readouterr().out
    assert "FAIL" in out and "residual" in out and "per primary" in out


def test_validate_single_config(tmp_path):
    assert main(["validate", "--n", "5", "--mu", "1", "--out", str(tmp_path)]) == 0


@pytest.mark.slow
def test_validate_standard_matrix(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "validate.txt").read_text().count("PASS") >= 20


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["spectrum", "--n", "5", "--mu", "1", "--out", str(d)]) == 0
        assert main(["equilibria", "--n", "5", "--mu", "1", "--out", str(d)]) == 0
    assert (a / "spectrum.json").read_bytes() == (b / "spectrum.json").read_bytes()
    assert (a / "equilibria.csv").read_bytes() == (b / "equilibria.csv").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rnbody", "equilibria", "--mu", "0.3", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS" in proc.stdout
