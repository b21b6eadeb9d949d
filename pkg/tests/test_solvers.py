import math

import numpy as np
import pytest

from bpsplit.harness import generate_instance
from bpsplit.operators import ProxParams
from bpsplit.problem import ProblemInstance, SupportInfo
from bpsplit.rate_theory import build_T_c, compute_geometry, spectral_rate
from bpsplit.solvers import (IterateTrace, SolverConfig, Variant, cp_start_from_dr,
                             fit_asymptotic_slope, lbsb_start_from_dr, reference_fixed_point,
                             solve, solve_chambolle_pock, solve_dr, solve_dr_reg,
                             solve_dr_swapped, solve_gdr, solve_lbsb)
from bpsplit.exceptions import InsufficientRegimeError


def cfg(variant, gamma=1.0, alpha=math.inf, lam=None, **kw):
    return SolverConfig(Variant(variant), ProxParams(gamma, alpha), lam=lam, **kw)


def measured(P, c, y0=None):
    """Reference fixed point, then a traced run against it."""
    ref = reference_fixed_point(P, c, y0)
    return solve(P, c, y0, y_ref=ref.y_final, x_ref=ref.x_final)


# ------------------------------------------------------------------ config

def test_config_forces_relaxation():
    assert cfg("DR").lam == 1.0
    assert cfg("PR").lam == 2.0
    with pytest.raises(ValueError):
        cfg("DR", lam=1.5)
    with pytest.raises(ValueError):
        cfg("GDR")
    with pytest.raises(ValueError):
        cfg("GDR", lam=2.0)
    assert cfg("GDR_REG", alpha=5.0, lam=2.0).lam == 2.0


def test_config_alpha_rules():
    with pytest.raises(ValueError):
        cfg("PR_REG")
    with pytest.raises(ValueError):
        cfg("DR", alpha=3.0)
    with pytest.raises(ValueError):
        cfg("DR", max_iters=0)


# -------------------------------------------------------------- plain DR

@pytest.mark.parametrize("variant", ["DR", "DR_SWAPPED", "GDR", "CHAMBOLLE_POCK"])
def test_zero_rhs_stays_at_zero(variant):
    P = ProblemInstance(np.array([[2.0, 1.0]]), np.zeros(1))
    res = solve(P, cfg(variant, lam=0.5 if variant == "GDR" else None))
    assert res.trace.converged_at == 1
    np.testing.assert_array_equal(res.x_final, 0.0)


def test_zero_rhs_lbsb():
    P = ProblemInstance(np.array([[2.0, 1.0]]), np.zeros(1))
    res = solve_lbsb(P, cfg("ADMM2_LBSB", alpha=4.0))
    assert res.converged
    for x in res.trace.iterates_x:
        np.testing.assert_array_equal(x, 0.0)


def test_dr_tiny_rate(tiny):
    P, _, _ = tiny
    res = measured(P, cfg("DR"))
    np.testing.assert_allclose(res.x_final, [1.0, 0.0], atol=1e-10)
    assert abs(fit_asymptotic_slope(res.trace) - 1 / math.sqrt(5)) < 1e-2


def test_dr_example1_shape_rate():
    P, S = generate_instance(3, 40, 3, seed=3)
    res = measured(P, cfg("DR"))
    cos1 = math.cos(compute_geometry(P.A, S).theta1)
    np.testing.assert_allclose(res.x_final, P.x_star, atol=1e-8)
    assert abs(fit_asymptotic_slope(res.trace) - cos1) < 1e-2


def test_dr_dual_estimate_is_certificate(tiny):
    P, _, _ = tiny
    res = solve(P, cfg("DR"))
    np.testing.assert_allclose(res.dual_estimate, [1.0, 0.5], atol=1e-10)


def test_dr_swapped_tiny(tiny):
    P, _, _ = tiny
    a = measured(P, cfg("DR"))
    b = measured(P, cfg("DR_SWAPPED"))
    np.testing.assert_allclose(b.x_final, [1.0, 0.0], atol=1e-10)
    assert abs(fit_asymptotic_slope(a.trace) - fit_asymptotic_slope(b.trace)) < 1e-2


def test_dr_swapped_same_minimizer():
    P, _ = generate_instance(5, 40, 3, seed=11)
    a = solve(P, cfg("DR"))
    b = solve(P, cfg("DR_SWAPPED"))
    assert a.converged and b.converged
    assert np.linalg.norm(a.x_final - b.x_final) <= 1e-6


# -------------------------------------------------------- regularized DR

def test_dr_reg_with_infinite_alpha_matches_dr():
    P, _ = generate_instance(3, 40, 3, seed=1)
    a = solve_dr(P, cfg("DR", max_iters=300, stop_tol=0.0))
    b = solve_dr_reg(P, cfg("DR_REG", max_iters=300, stop_tol=0.0))
    np.testing.assert_array_equal(np.array(a.trace.iterates_y), np.array(b.trace.iterates_y))


def test_dr_reg_at_optimal_c_tiny(tiny):
    P, _, _ = tiny
    theta = math.acos(1 / math.sqrt(5))
    c = 1 / (math.cos(theta) + math.sin(theta)) ** 2
    alpha = 10.0
    res = measured(P, cfg("DR_REG", gamma=alpha * (1 - c) / c, alpha=alpha))
    # tan(theta_1) = 2, so the best rate is 1 / (1 + 2); c* is a double
    # eigenvalue, the error decays like k rho^k and the short fit reads high
    S = SupportInfo.from_solution(P.x_star)
    rho = spectral_rate(build_T_c(S, P.A, c), compute_geometry(P.A, S))
    assert abs(rho - 1 / 3) < 1e-8
    assert abs(fit_asymptotic_slope(res.trace) - 1 / 3) < 2e-2


# ------------------------------------------------------------ relaxed DR

def test_gdr_unit_relaxation_reduces_to_dr():
    P, _ = generate_instance(3, 40, 3, seed=2)
    a = solve_dr(P, cfg("DR", max_iters=200, stop_tol=0.0))
    b = solve_gdr(P, cfg("GDR", lam=1.0, max_iters=200, stop_tol=0.0))
    np.testing.assert_allclose(np.array(a.trace.iterates_y), np.array(b.trace.iterates_y),
                               atol=1e-12)
    c = solve_dr(P, cfg("DR_REG", alpha=7.0, max_iters=200, stop_tol=0.0))
    d = solve_gdr(P, cfg("GDR_REG", alpha=7.0, lam=1.0, max_iters=200, stop_tol=0.0))
    # GDR_REG carries the l2 term in the affine resolvent, DR_REG in the threshold:
    # the two iterations reach the same minimizer
    assert np.linalg.norm(c.x_final - d.x_final) < 1e-6


def test_pr_terminates_fast_at_quarter_angle():
    # N(A) = span(sqrt2, 1, 1) meets N(B) = span(e1) at pi/4; c* = 1/2 gives rate 0
    A = np.array([[1.0, -math.sqrt(2), 0.0], [0.0, 1.0, -1.0]])
    x_star = np.array([1.0, 0.0, 0.0])
    P = ProblemInstance(A, A @ x_star, x_star)
    S_theta = compute_geometry(A, SupportInfo.from_solution(x_star)).theta1
    assert abs(S_theta - math.pi / 4) < 1e-12
    alpha = 10.0
    c = cfg("PR_REG", gamma=alpha, alpha=alpha)
    assert abs(c.prox.c - 0.5) < 1e-15
    res = measured(P, c)
    hit = [k for k, e in zip(res.trace.iterations, res.trace.err_y) if e <= 1e-12]
    assert hit and hit[0] <= 60
    np.testing.assert_allclose(res.x_final, x_star, atol=1e-10)


def test_pr_beats_dr_below_c_tilde():
    P, S = generate_instance(5, 40, 3, seed=4)
    theta = compute_geometry(P.A, S).theta1
    c_tilde = 1 / (2 - math.cos(theta) ** 2)
    c = 0.8 * c_tilde
    alpha = 20.0
    gamma = alpha * (1 - c) / c
    dr = measured(P, cfg("GDR_REG", gamma=gamma, alpha=alpha, lam=1.0))
    pr = measured(P, cfg("PR_REG", gamma=gamma, alpha=alpha))
    assert fit_asymptotic_slope(pr.trace) < fit_asymptotic_slope(dr.trace)


def test_unregularized_pr_is_flagged_when_stuck():
    P, _ = generate_instance(3, 40, 3, seed=0)
    res = solve(P, cfg("PR", max_iters=20000, stall_window=50))
    assert res.converged or res.stalled


# ------------------------------------------------------ dual formulations

def test_lbsb_matches_regularized_dr():
    P, _ = generate_instance(5, 40, 3, seed=5)
    gamma, alpha = 1.3, 8.0
    y0 = np.random.default_rng(0).standard_normal(40)
    dr = solve_dr(P, cfg("DR_REG", gamma=gamma, alpha=alpha, max_iters=200, stop_tol=0.0), y0)
    z0, w0, x0 = lbsb_start_from_dr(P, gamma, y0)
    lb = solve_lbsb(P, cfg("ADMM2_LBSB", gamma=gamma, alpha=alpha, max_iters=200,
                           stop_tol=0.0), z0, w0, x0)
    Y1, Y2 = np.array(dr.trace.iterates_y), np.array(lb.trace.iterates_y)
    assert Y1.shape == Y2.shape == (201, 40)
    assert np.max(np.abs(Y1 - Y2)) <= 1e-10


def test_lbsb_primal_estimate_is_infeasible(tiny):
    P, _, _ = tiny
    res = solve(P, cfg("ADMM2_LBSB", alpha=5.0, max_iters=400))
    xs = np.array(res.trace.iterates_x)
    ts = np.array(res.trace.extras["t"])
    assert np.max(np.abs(xs @ P.A.T - P.b)) <= 1e-10
    assert np.max(np.abs(ts @ P.A.T - P.b)) > 1e-8


def test_chambolle_pock_matches_dr():
    P, _ = generate_instance(3, 40, 3, seed=6)
    gamma = 0.8
    y0 = np.random.default_rng(1).standard_normal(40)
    dr = solve_dr(P, cfg("DR", gamma=gamma, max_iters=200, stop_tol=0.0), y0)
    x0, w0 = cp_start_from_dr(P, gamma, y0)
    cp = solve_chambolle_pock(P, cfg("CHAMBOLLE_POCK", gamma=gamma, max_iters=200,
                                     stop_tol=0.0), x0, w0)
    assert np.max(np.abs(np.array(dr.trace.iterates_y) - np.array(cp.trace.iterates_y))) <= 1e-10
    assert np.max(np.abs(np.array(dr.trace.iterates_x) - np.array(cp.trace.iterates_x))) <= 1e-10


def test_chambolle_pock_dual_is_certificate():
    P, S = generate_instance(3, 40, 3, seed=7)
    res = solve(P, cfg("CHAMBOLLE_POCK"))
    w = res.dual_estimate
    assert np.max(np.abs(w[S.support] - S.sign_pattern[S.support])) <= 1e-6
    assert np.max(np.abs(w[S.zero_indices])) <= 1 + 1e-12


# ---------------------------------------------------------------- fitting

def _trace(err):
    return IterateTrace(iterations=list(range(len(err))), err_y=list(err))


def test_fit_geometric():
    assert abs(fit_asymptotic_slope(_trace(0.9 ** np.arange(200))) - 0.9) < 1e-12


def test_fit_transient_then_tail():
    k = np.arange(300)
    err = np.where(k < 50, 5.0 * 0.99**k, 5.0 * 0.99**50 * 0.8 ** (k - 50))
    assert abs(fit_asymptotic_slope(_trace(err), window=100) - 0.8) < 1e-6


def test_fit_too_short():
    with pytest.raises(InsufficientRegimeError):
        fit_asymptotic_slope(_trace([1.0, 0.5]))
    with pytest.raises(InsufficientRegimeError):
        fit_asymptotic_slope(_trace([]))


def test_record_every_thins_the_trace(tiny):
    P, _, _ = tiny
    res = solve(P, cfg("DR", record_every=5, max_iters=50, stop_tol=0.0))
    assert res.trace.iterations[:3] == [0, 5, 10]
    assert all(k % 5 == 0 for k in res.trace.iterations[:-1])
    assert len(res.trace.steps) == res.trace.iterations[-1] <= 50
