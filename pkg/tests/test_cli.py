"""Command surface: outputs, exit codes, reproducibility."""

import json
from pathlib import Path

import pytest

from ellipdim import cli

SPECS = Path(__file__).resolve().parent.parent / "fieldspecs"


def run(*argv):
    return cli.main(list(argv))


def test_dims_identity(tmp_path):
    code = run("dims", "--field", str(SPECS / "identity.json"), "--d", "3",
               "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "dims.csv").read_text().strip().splitlines()
    assert rows[0] == "d,exact_if_laplacian,estimated,flags"
    got = [tuple(r.split(",")[:3]) for r in rows[1:]]
    assert got == [("0", "1", "1"), ("1", "3", "3"), ("2", "5", "5"), ("3", "7", "7")]
    report = json.loads((tmp_path / "bound_report.json").read_text())
    assert report["passed"] is True


def test_dims_degree_zero(tmp_path):
    code = run("dims", "--field", str(SPECS / "identity.json"), "--d", "0",
               "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "dims.csv").read_text().strip().splitlines()
    assert rows[1].startswith("0,1,1")


def test_malformed_field_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "radial-piecewise", "params": {"breaks": [1.0]}}')
    code = run("dims", "--field", str(bad), "--d", "1", "--out", str(tmp_path))
    assert code == 2


def test_unknown_flag_exits_2(tmp_path):
    code = run("dims", "--field", str(SPECS / "identity.json"), "--nope")
    assert code == 2


def test_verify_lemma1_identity(tmp_path):
    code = run("verify", "lemma1", "--field", str(SPECS / "identity.json"),
               "--t", "1", "--d", "1", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "verify_lemma1.csv").read_text().strip().splitlines()
    margin = float(rows[1].split(",")[2])
    assert margin == pytest.approx(2.0, abs=2e-3)


def test_verify_eigen28_diag(tmp_path):
    code = run("verify", "eigen28", "--field", str(SPECS / "diag_1_2.json"),
               "--t", "1", "--k", "50", "--grid", "2048", "--tol", "1e-6",
               "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "verify_eigen28.csv").read_text().strip().splitlines()
    assert len(rows) == 51
    assert all(float(r.split(",")[2]) >= -1e-6 for r in rows[1:])


def test_verify_theorem2_identity(tmp_path):
    code = run("verify", "theorem2", "--field", str(SPECS / "identity.json"),
               "--d", "20", "--out", str(tmp_path))
    assert code == 0
    report = json.loads((tmp_path / "bound_report.json").read_text())
    assert report["envelopes"]["dim_sum"]["lhs"] == 440.0


def test_verify_growth21_checkerboard(tmp_path):
    code = run("verify", "growth21", "--field", str(SPECS / "checkerboard.json"),
               "--d", "1", "--h", "0.1", "--R", "8", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "verify_growth21.csv").read_text().strip().splitlines()
    slope = float(rows[1].split(",")[1])
    assert slope <= 4.2


def test_verify_integrated_diag(tmp_path):
    code = run("verify", "integrated", "--field", str(SPECS / "diag_1_2.json"),
               "--d", "1", "--r0", "1", "--r", "2", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "verify_integrated.csv").read_text().strip().splitlines()
    assert float(rows[1].split(",")[2]) >= -1e-3


def test_spectrum_identity(tmp_path):
    code = run("spectrum", "--field", str(SPECS / "identity.json"),
               "--t", "1", "--m", "5", "--grid", "2048", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "spectrum.csv").read_text().strip().splitlines()
    vals = [float(r.split(",")[1]) for r in rows[1:]]
    assert vals == pytest.approx([0.0, 1.0, 1.0, 4.0, 4.0], abs=2e-3)


def test_profile_conic_decay(tmp_path):
    code = run("profile", "--field", str(SPECS / "conic_decay.json"),
               "--radii", "1,2,3", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "profile.csv").read_text().strip().splitlines()
    assert all(r.endswith("analytic") for r in rows[1:])
    lam = [float(r.split(",")[1]) for r in rows[1:]]
    assert lam == [1.0, 1.0, 1.0]
    meta = json.loads((tmp_path / "profile.json").read_text())
    assert meta["lambda_inf"] == 1.0 and meta["Lambda_inf"] == 1.0


def test_solve_transmission_probe(tmp_path, capsys):
    code = run("solve", "--field", str(SPECS / "radial_step.json"),
               "--trace", "x", "--r", "1", "--h", "0.02",
               "--probe", "0.25,0", "--out", str(tmp_path))
    assert code == 0
    payload = json.loads((tmp_path / "solution.json").read_text())
    assert payload["probe"]["value"] == pytest.approx(4.0 / 13.0, abs=2e-3)
    assert (tmp_path / "solution_vertices.csv").exists()
    assert (tmp_path / "solution_triangles.csv").exists()
    assert (tmp_path / "solution_values.csv").exists()


def test_byte_identical_reruns(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        code = run("spectrum", "--field", str(SPECS / "diag_1_2.json"),
                   "--t", "1", "--m", "8", "--grid", "512", "--out", str(out))
        assert code == 0
    assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()

    for out in (out1, out2):
        code = run("profile", "--field", str(SPECS / "random_cells.json"),
                   "--radii", "1,2", "--seed", "3", "--out", str(out))
        assert code == 0
    assert (out1 / "profile.csv").read_bytes() == (out2 / "profile.csv").read_bytes()
    assert (out1 / "profile.json").read_bytes() == (out2 / "profile.json").read_bytes()

    for out in (out1, out2):
        code = run("verify", "theorem2", "--field", str(SPECS / "identity.json"),
                   "--d", "2", "--out", str(out))
        assert code == 0
    assert (out1 / "bound_report.json").read_bytes() == (out2 / "bound_report.json").read_bytes()
