import json
import subprocess
import sys

import numpy as np
import pytest

from bpsplit.cli import main
from bpsplit.harness import generate_instance
from bpsplit.io import load_matrix, load_vector, save_matrix, save_vector


@pytest.fixture
def files(tmp_path):
    P, S = generate_instance(3, 40, 3, seed=0)
    save_matrix(tmp_path / "A.mtx", P.A)
    save_vector(tmp_path / "b.txt", P.b)
    return tmp_path, P, S


def _support(S):
    return ",".join(map(str, S.support))


def test_io_roundtrip(tmp_path, rng):
    M = rng.standard_normal((3, 5))
    save_matrix(tmp_path / "m.mtx", M)
    assert load_matrix(tmp_path / "m.mtx").tobytes() == M.tobytes()
    save_matrix(tmp_path / "m.csv", M)
    np.testing.assert_array_equal(load_matrix(tmp_path / "m.csv"), M)
    v = rng.standard_normal(4)
    save_vector(tmp_path / "v.txt", v)
    np.testing.assert_array_equal(load_vector(tmp_path / "v.txt"), v)


def test_solve(files, capsys):
    d, P, _ = files
    rc = main(["solve", "--matrix", str(d / "A.mtx"), "--rhs", str(d / "b.txt"),
               "--variant", "DR", "--gamma", "1", "--max-iters", "100000", "--tol", "1e-12",
               "--out", str(d / "out")])
    assert rc == 0
    np.testing.assert_allclose(load_vector(d / "out" / "x.txt"), P.x_star, atol=1e-8)
    assert "converged" in capsys.readouterr().out


def test_solve_unconverged(files):
    d, _, _ = files
    rc = main(["solve", "--matrix", str(d / "A.mtx"), "--rhs", str(d / "b.txt"),
               "--variant", "dr", "--gamma", "1", "--max-iters", "3", "--tol", "1e-12",
               "--out", str(d / "out")])
    assert rc == 2


def test_solve_bad_input(files):
    d, _, _ = files
    base = ["solve", "--rhs", str(d / "b.txt"), "--gamma", "1", "--max-iters", "10",
            "--tol", "1e-12", "--out", str(d / "out")]
    assert main(base + ["--matrix", str(d / "missing.mtx"), "--variant", "DR"]) == 1
    assert main(base + ["--matrix", str(d / "A.mtx"), "--variant", "NEWTON"]) == 1
    assert main(base + ["--matrix", str(d / "A.mtx"), "--variant", "GDR"]) == 1


def test_analyze(files, capsys):
    d, P, S = files
    assert main(["analyze", "--matrix", str(d / "A.mtx"), "--support", _support(S)]) == 0
    out = capsys.readouterr().out
    for key in ("theta1", "c_star", "c_sharp", "c_bar", "c,rho_dr,rho_pr"):
        assert key in out
    assert main(["analyze", "--matrix", str(d / "A.mtx"), "--support", "0,x"]) == 1


def test_estimate_angle(files, capsys):
    d, _, S = files
    assert main(["estimate-angle", "--matrix", str(d / "A.mtx"), "--support", _support(S),
                 "--method", "dr", "--iters", "3000"]) == 0
    lines = dict(l.split(None, 1) for l in capsys.readouterr().out.splitlines() if " " in l)
    assert abs(float(lines["cos_theta1_estimate"]) - float(lines["cos_theta1_svd"])) < 1e-3


def test_sweep(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--theta", "0.3", "--c-grid", "0.5:1:0.1", "--lambda-grid",
                 "0.5:2:0.5", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 6 * 4
    assert main(["sweep", "--theta", "0.3", "--c-grid", "0.5:1", "--lambda-grid",
                 "0.5:2:0.5", "--out", str(out)]) == 1


def test_experiment(tmp_path, capsys):
    spec = tmp_path / "e.json"
    spec.write_text(json.dumps({"instance": {"m": 3, "n": 40, "k": 3, "seed": 0},
                                "configs": [{"variant": "DR", "gamma": 1}]}))
    assert main(["experiment", "--spec", str(spec)]) == 0
    assert ",PASS," in capsys.readouterr().out
    spec.write_text("{not json")
    assert main(["experiment", "--spec", str(spec)]) == 1


def test_rip_bound(tmp_path, rng, capsys):
    A = rng.standard_normal((4, 10))
    A /= np.linalg.norm(A, axis=0)
    save_matrix(tmp_path / "R.mtx", A)
    assert main(["rip-bound", "--matrix", str(tmp_path / "R.mtx"), "--sparsity", "2"]) == 0
    assert "bound" in capsys.readouterr().out
    save_matrix(tmp_path / "U.mtx", 2 * A)
    assert main(["rip-bound", "--matrix", str(tmp_path / "U.mtx"), "--sparsity", "2"]) == 1


def test_missing_subcommand_and_module_entry():
    assert main([]) == 1
    proc = subprocess.run([sys.executable, "-m", "bpsplit", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "estimate-angle" in proc.stdout
