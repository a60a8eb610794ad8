import json
import math

import pytest

from trapmodes import cli, spectral2d, spectral3d
from trapmodes.eigensolve import EigenSolveError
from trapmodes.io_export import read_csv
from trapmodes.spectral2d import PI2

COARSE3D = ["--R1", "4", "--R2", "4", "--n1", "8", "--n2", "8", "--n3", "4"]


def test_mu1_reference(capsys):
    assert cli.run(["mu1", "--alpha", "0.7853981633974483", "--R", "12"]) == 0
    out = capsys.readouterr().out
    value = float(out.split("mu1/pi^2 = ")[1].split()[0])
    assert abs(value - 0.929) < 0.005


def test_mu1_is_thin_adapter(capsys):
    assert cli.run(["mu1", "--alpha", "0.6", "--ny", "12", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    direct = spectral2d.mu1(0.6, spectral2d.StripNumerics(ny=12)).row()
    assert payload == direct


def test_solve3d_reference(capsys):
    assert cli.run(["solve3d", "--kappa1", "1", "--kappa2", "-1", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["eigenvalues_over_pi2"][0] - 0.81) <= 0.02
    assert payload["discrete_over_pi2"]


def test_invalid_kappa_exit_2(capsys):
    assert cli.run(["solve3d", "--kappa1", "1", "--kappa2", "2"]) == 2
    assert "|kappa2| <= kappa1" in capsys.readouterr().err


def test_unknown_flag_exit_2(capsys):
    assert cli.run(["mu1", "--alpha", "0.5", "--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err
    assert cli.run([]) == 2


def test_solver_failure_exit_3(monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise EigenSolveError("factorization failed")

    monkeypatch.setattr(spectral2d, "mu1", fail)
    assert cli.run(["tau1-prime", "--alpha1", "0.5"]) == 3
    assert "solver failure" in capsys.readouterr().err


def test_inconclusive_bracket_exit_3(capsys):
    argv = ["find-h", "--kappa1", "1", "--lo", "0.95", "--hi", "1.0", *COARSE3D]
    assert cli.run(argv) == 3


def test_threshold_curve_files(tmp_path, capsys):
    argv = ["threshold-curve", "--alphas", "0.3,0.6,0.9", "--ny", "10", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    table = read_csv(tmp_path / "threshold_curve.csv")
    assert table.columns == spectral2d.CSV_COLUMNS
    mu = table.column("mu1")
    assert mu[0] > mu[1] > mu[2]
    assert (tmp_path / "threshold_curve.csv.json").exists()
    assert cli.run(["threshold-curve", "--alphas", "0.6,0.3"]) == 2


def test_csv_stdout(capsys):
    assert cli.run(["lambda-dagger", "--kappa1", "0", "--kappa2", "0", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "kappa1,kappa2,lambda_dagger,lambda_dagger_over_pi2"
    assert lines[1].split(",")[2] == repr(PI2)


def test_solve3d_writes_vtk(tmp_path, capsys):
    argv = ["solve3d", "--kappa1", "1", "--kappa2", "-1", *COARSE3D, "--margin", "0.02", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    assert (tmp_path / "solve3d_u1.vtk").read_text().startswith("# vtk DataFile Version 3.0")
    assert (tmp_path / "solve3d.json").exists()


def test_sweep_matches_library(capsys):
    argv = ["sweep-kappa2", "--kappa1", "1", "--grid=-1,-0.5", *COARSE3D, "--format", "json"]
    assert cli.run(argv) == 0
    payload = json.loads(capsys.readouterr().out)
    num = spectral3d.IncisorNumerics(R1=4, R2=4, n1=8, n2=8, n3=4)
    direct = spectral3d.sweep_kappa2(1.0, [-1.0, -0.5], num)
    assert payload["lambda1_over_pi2"] == (direct.lambda1 / PI2).tolist()
    assert cli.run(["sweep-kappa2", "--kappa1", "1", "--grid=-2"]) == 2


def test_certificates(capsys):
    assert cli.run(["certify-negative", "--kappa1", "1", "--kappa2", "-1", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["negative"] is True
    assert cli.run(["certify-negative", "--kappa1", "1", "--kappa2", "0.5"]) == 2
    assert cli.run(["certify-symmetric", "--kappa1", "1"]) == 0
    assert "negative" in capsys.readouterr().out


def test_count_and_dirichlet_check(capsys):
    assert cli.run(["count", "--kappa1", "1", "--kappa2", "-1", *COARSE3D, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] >= 1
    argv = ["dirichlet-check", "--kappa1", "0", "--kappa2", "0", "--radii", "3,4", *COARSE3D]
    assert cli.run(argv) == 0


def test_tau1_prime_validation(capsys):
    assert cli.run(["tau1-prime", "--alpha1", "0"]) == 2
    assert cli.run(["tau1-prime", "--alpha1", str(math.pi / 4), "--ny", "16"]) == 0


def test_repro_subset(tmp_path, capsys):
    assert cli.run(["repro-paper", "--only", "9", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "repro_paper.json").read_text())
    assert summary["passed"] == summary["total"] == 1
    assert "[PASS] criterion  9" in (tmp_path / "repro_paper.txt").read_text()
    assert cli.run(["repro-paper", "--only", "14"]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["--version"])
    assert "trapmodes" in capsys.readouterr().out
