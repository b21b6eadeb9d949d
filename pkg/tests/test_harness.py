import csv
import io
import json
import math

import numpy as np
import pytest

from bpsplit.exceptions import InsufficientRegimeError
from bpsplit.harness import (ExperimentSpec, RateReport, analyze_run, bp_minimizer,
                             detect_linear_regime, error_curve_csv, generate_instance,
                             make_config, parse_grid, real_fourier_matrix, run_experiment,
                             sweep_rates, verify_uniqueness)
from bpsplit.problem import ProblemInstance, SupportInfo
from bpsplit.rate_theory import compute_geometry, optimal_parameters


# ------------------------------------------------------------- instances

def test_generate_instance_example1_shape():
    P, S = generate_instance(3, 40, 3, seed=0)
    assert P.A.shape == (3, 40) and len(S.support) == 3
    assert S.r + P.m == P.n  # unique fixed point regime
    assert np.all(np.abs(P.x_star[S.support]) >= 0.1)
    assert verify_uniqueness(P, S).unique


def test_generate_instance_zero_sparsity():
    P, S = generate_instance(3, 10, 0, seed=1)
    np.testing.assert_array_equal(P.x_star, 0.0)
    np.testing.assert_array_equal(P.b, 0.0)


def test_generate_instance_deterministic():
    a, _ = generate_instance(5, 40, 3, seed=42)
    b, _ = generate_instance(5, 40, 3, seed=42)
    assert a.A.tobytes() == b.A.tobytes() and a.x_star.tobytes() == b.x_star.tobytes()


def test_generate_instance_validation():
    with pytest.raises(ValueError):
        generate_instance(5, 4, 1, seed=0)
    with pytest.raises(ValueError):
        generate_instance(3, 10, 2, seed=0, distribution="cauchy")


def test_fourier_rows():
    F = real_fourier_matrix(8)
    np.testing.assert_allclose(F @ F.T, np.eye(8), atol=1e-12)
    P, S = generate_instance(4, 16, 1, seed=0, distribution="fourier", rows=[1, 3, 5, 7])
    np.testing.assert_allclose(P.A, real_fourier_matrix(16)[[1, 3, 5, 7]])


def test_bp_minimizer_tiny():
    np.testing.assert_allclose(bp_minimizer(np.array([[2.0, 1.0]]), np.array([2.0])), [1.0, 0.0],
                               atol=1e-12)


def test_uniqueness_examples():
    P = ProblemInstance(np.array([[2.0, 1.0]]), np.array([2.0]), np.array([1.0, 0.0]))
    cert = verify_uniqueness(P, SupportInfo.from_solution(P.x_star))
    assert cert.unique
    np.testing.assert_allclose(cert.eta, [1.0, 0.5], atol=1e-9)

    P = ProblemInstance(np.array([[1.0, 1.0]]), np.array([1.0]), np.array([1.0, 0.0]))
    cert = verify_uniqueness(P, SupportInfo.from_solution(P.x_star))
    assert not cert.unique and cert.marginal

    P = ProblemInstance(np.array([[1.0, 2.0, 3.0]]), np.zeros(1), np.zeros(3))
    cert = verify_uniqueness(P, SupportInfo.from_solution(P.x_star))
    assert cert.unique
    np.testing.assert_array_equal(cert.eta, 0.0)


# ---------------------------------------------------------------- regimes

def test_detect_linear_regime_geometric_tail():
    k = np.arange(400)
    err = np.where(k < 100, np.cos(k / 7.0) ** 2 + 0.5, 1.5 * 0.9 ** (k - 100))
    reg = detect_linear_regime(k, err, floor=1e-12)
    assert abs(reg.rate - 0.9) < 1e-8
    assert reg.start >= 100


def test_detect_linear_regime_transient_only():
    k = np.arange(60)
    err = 1.0 / (1.0 + k) ** 2  # sublinear decay, local slope keeps changing
    with pytest.raises(InsufficientRegimeError, match="transient only"):
        detect_linear_regime(k, err, floor=1e-30)


def test_error_curve_csv_schema():
    text = error_curve_csv([0, 1, 2], [1.0, 0.5, 0.0], [2.0, 1.0, 0.5])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["k", "err_y", "err_x", "log_err_y"]
    assert float(rows[2][3]) == pytest.approx(math.log(0.5))
    assert rows[3][3] == "-inf"


# ------------------------------------------------------------ experiments

def test_analyze_run_example1_shape():
    P, S = generate_instance(3, 40, 3, seed=2)
    row, curve = analyze_run(P, S, make_config({"variant": "DR", "gamma": 1.0}), np.zeros(40))
    assert row.status == "PASS" and row.kind == "INTERIOR"
    assert abs(row.predicted - math.cos(compute_geometry(P.A, S).theta1)) < 1e-12
    assert row.gap <= 1e-2
    assert curve.startswith("k,err_y,err_x,log_err_y\n")


def test_relaxation_one_is_fastest():
    spec = {"instance": {"m": 5, "n": 40, "k": 3, "seed": 3},
            "configs": [{"variant": "GDR", "gamma": 1.0, "lambda": lam}
                        for lam in (0.5, 1.0, 1.5)]}
    rows = run_experiment(spec).rows
    assert all(r.status == "PASS" for r in rows)
    fitted = [r.fitted for r in rows]
    assert int(np.argmin(fitted)) == 1


def test_run_experiment_records_errors_and_is_deterministic(tmp_path):
    d = {"instance": {"m": 3, "n": 40, "k": 3, "seed": 5},
         "configs": [{"variant": "DR", "gamma": 1.0},
                     {"variant": "DR", "gamma": 1.0, "alpha": 3.0}],
         "reference": {"max_iters": 60000},
         "output_dir": str(tmp_path / "out")}
    a = run_experiment(d)
    b = run_experiment(ExperimentSpec.from_dict(d))
    assert a.to_csv() == b.to_csv()
    assert [r.status for r in a.rows] == ["PASS", "ERROR"]
    assert (tmp_path / "out" / "report.csv").read_text() == a.to_csv()
    assert (tmp_path / "out" / "run_00_DR.csv").exists()


def test_experiment_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"instance": {}, "configs": []})
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"instance": {}, "configs": [{"gamma": 1}]})
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"instance": {}, "configs": [{"variant": "DR", "gamma": 1}],
                                  "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"instance": {}, "configs": [{"variant": "DR", "gamma": 1}],
                                  "sweep": {"c_grid": [0.0, 0.5]}})
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"instance": {"m": 3, "n": 10, "k": 1, "seed": 0},
                                "configs": [{"variant": "DR", "gamma": 1}]}))
    assert ExperimentSpec.from_json(path).instance["n"] == 10


def test_report_csv_header():
    assert RateReport().to_csv().splitlines()[0].startswith("variant,gamma,alpha,c,lam,")


# ----------------------------------------------------------------- sweeps

def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0.5:0.98:0.02"), np.round(np.arange(25) * 0.02 + 0.5, 12))
    np.testing.assert_allclose(parse_grid("1:1:0.1"), [1.0])
    for bad in ("1:2", "a:b:c", "1:0:0.1", "0:1:0"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_sweep_examples():
    theta = 0.35
    c_grid = parse_grid("0.1:1.0:0.01")
    lam_grid = parse_grid("0.05:2.0:0.05")
    t = sweep_rates(theta, c_grid, lam_grid)
    assert t.max_spectral_gap < 1e-10
    rows = t.rows
    unit = [r["rho"] for r in rows if r["c"] == 1.0 and r["lambda"] == 1.0]
    assert unit == [pytest.approx(math.cos(theta), abs=1e-15)]
    dr = {r["c"]: r["rho_dr"] for r in rows}
    c_min = min(dr, key=dr.get)
    p = optimal_parameters(theta)
    assert abs(c_min - p.c_star) <= 0.01 + 1e-12
    assert abs(dr[c_min] - 1 / (1 + math.tan(theta))) <= 0.01
    best = min(rows, key=lambda r: r["rho"])
    tan = math.tan(theta)
    assert abs(best["rho"] - (1 - tan) / (1 + tan)) <= 0.02
    assert abs(best["c"] - p.c_star) <= 0.01 + 1e-12 and best["lambda"] == 2.0
    assert sum(r["near_c_star"] for r in rows) == len(lam_grid)


def test_sweep_csv_is_numeric():
    text = sweep_rates(0.3, [0.5, 1.0], [1.0, 2.0]).to_csv()
    for row in list(csv.reader(io.StringIO(text)))[1:]:
        [float(v) for v in row]
