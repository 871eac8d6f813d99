import subprocess
import sys

import numpy as np
import pytest

from eddycurrent import cli
from eddycurrent.errors import ConvergenceError
from eddycurrent.io import read_csv


def run(tmp_path, command, text="", *flags):
    cfgfile = tmp_path / "scenario.cfg"
    cfgfile.write_text(text)
    out = tmp_path / "out"
    return cli.main([command, "--config", str(cfgfile), "--out", str(out), *flags]), out


SMALL = "grid.n = 4\neigen.modes = 4\ntime.T = 0.05\ntime.dt = 0.01\n"
DRIVEN = SMALL + ("sources.kind = constant\nsources.je = 1, 0, 0\nsources.jm = 0, 0, 1\n"
                  "sources.time = sin\ninitial.kind = random\n")


def test_grid_info(tmp_path, capsys):
    rc, _ = run(tmp_path, "grid-info", "grid.cells = 2, 2, 2\n")
    assert rc == 0
    text = capsys.readouterr().out
    assert "27" in text and "max|C G| = 0" in text


def test_zero_data_trajectory_is_zero(tmp_path):
    rc, out = run(tmp_path, "solve", SMALL)
    assert rc == 0
    header, data = read_csv(out / "trajectory.csv")
    assert header[:2] == ["t", "h_1"] and header[-1] == "dtH_dual"
    assert data.shape == (6, 1 + 4 + 6)
    assert not data[:, 1:].any()


def test_infeasible_material_exits_2(tmp_path, capsys):
    rc, _ = run(tmp_path, "solve", SMALL + "sigma.constant = 10\nmaterial.lambda = 5\n")
    assert rc == 2
    assert "INFEASIBLE" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["grid.bogus = 1\n", "time.dt = 0.03\ntime.T = 0.1\n",
                                  "eigen.modes = 500\ngrid.n = 2\n"])
def test_bad_input_exits_2(tmp_path, text):
    assert run(tmp_path, "eigen", text)[0] == 2


def test_missing_config_exits_2(tmp_path):
    assert cli.main(["solve", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == 2


def test_solver_failure_exits_3(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise ConvergenceError("stagnated", [1.0])
    monkeypatch.setattr(cli, "magnetic_eigenbasis", fail)
    assert run(tmp_path, "eigen", SMALL)[0] == 3


def test_verify_pass_and_fail(tmp_path):
    rc, out = run(tmp_path, "verify", DRIVEN)
    assert rc == 0
    for name in ("verify_weak.csv", "verify_strong.csv"):
        header, data = read_csv(out / name)
        assert header == ["t", "lhs", "rhs", "constant", "pass"]
        assert np.all(data[:, 4] == 1)
    assert "Lambda" in (out / "verify.txt").read_text()
    # an impossible energy tolerance turns the run into a verification failure
    rc, _ = run(tmp_path, "verify", DRIVEN + "verify.energy-tol = 0\n")
    assert rc == 4


def test_eigen_outputs(tmp_path):
    rc, out = run(tmp_path, "eigen", "", "--grid", "4", "--modes", "3")
    assert rc == 0
    header, data = read_csv(out / "eigenvalues.csv")
    assert header == ["index", "lambda"] and data.shape == (3, 2)
    assert np.allclose(data[:, 1] / np.pi ** 2, 2.1, atol=0.01)
    assert sorted(p.name for p in out.glob("mode_*.vtk")) == ["mode_001.vtk", "mode_002.vtk", "mode_003.vtk"]


def test_decompose_outputs(tmp_path):
    # a jump in mu has no Lipschitz bound; the run proceeds with a warning
    with pytest.warns(UserWarning, match="Lipschitz"):
        rc, out = run(tmp_path, "decompose", "grid.n = 4\nmu.layers[0].z = 0.5, 1\n"
                      "mu.layers[0].value = 10\nmaterial.lambda = 10\n")
    assert rc == 0
    header, data = read_csv_mixed(out / "decompose.csv")
    assert header == ["split", "norm_F", "norm_grad", "norm_remainder", "pythagoras_residual"]
    assert [r[0] for r in data] == ["neumann", "dirichlet"]
    assert all(float(r[4]) < 1e-8 for r in data)


def read_csv_mixed(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_snapshots(tmp_path):
    rc, out = run(tmp_path, "solve", DRIVEN + "output.snapshot-stride = 2\n")
    assert rc == 0
    names = sorted(p.name for p in (out / "snapshots").iterdir())
    assert names == ["E_00000.vtk", "E_00002.vtk", "E_00004.vtk",
                     "H_00000.vtk", "H_00002.vtk", "H_00004.vtk"]


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    run(a, "solve", DRIVEN, "--seed", "7")
    run(b, "solve", DRIVEN, "--seed", "7")
    assert (a / "out/trajectory.csv").read_bytes() == (b / "out/trajectory.csv").read_bytes()
    c = tmp_path / "c"
    c.mkdir()
    run(c, "solve", DRIVEN, "--seed", "8")
    assert (a / "out/trajectory.csv").read_bytes() != (c / "out/trajectory.csv").read_bytes()


def test_morrey(tmp_path):
    rc, out = run(tmp_path, "morrey", DRIVEN + "output.snapshot-stride = 5\n")
    assert rc == 0
    header, data = read_csv(out / "regularity.csv")
    assert header[0] == "t" and header[-1] == "constant"
    assert data.shape[0] == 2
    assert "Hoelder" in (out / "regularity.txt").read_text()


def test_manufactured_n8(tmp_path):
    rc, out = run(tmp_path, "manufactured", "", "--grid", "8", "--case", "single-cavity-mode")
    assert rc == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "case,n,h,L2_error_H,L2_error_E,rate_H,rate_E"
    assert [l.split(",")[1] for l in lines[1:]] == ["4", "8"]
    assert float(lines[2].split(",")[5]) >= 0.9


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "eddycurrent.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for name in ("grid-info", "decompose", "eigen", "solve", "verify", "morrey", "manufactured"):
        assert name in r.stdout


def test_sigma_layers_over_background(tmp_path):
    text = SMALL + ("sigma.constant = 2, 3, 4\nsigma.layers[0].z = 0, 0.5\n"
                    "sigma.layers[0].tensor = 5\n")
    sc = cli.cfg.parse(text)
    model = cli.build_model(sc, cli.GridSpec.cube(4))
    assert model.lambda_bound == 5.0
    s = model.sigma
    assert np.sum(np.all(s == 5 * np.eye(3), axis=(1, 2))) == 32
    assert np.sum(np.all(s == np.diag([2.0, 3.0, 4.0]), axis=(1, 2))) == 32
    assert run(tmp_path, "solve", text)[0] == 0
