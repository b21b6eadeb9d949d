"""Splitting iterations for basis pursuit and its l2-regularized form.

All solvers share one driver so that stopping, stall detection and trace
recording behave identically. Each solver exposes the Douglas-Rachford
auxiliary sequence ``y^k`` (for the dual-form methods it is reconstructed by
the change of variables that makes them equivalent to DR), so error curves
from different variants can be compared directly.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import InsufficientRegimeError
from .operators import AffineConstraint, ProxParams, project_box, soft_threshold
from .problem import ProblemInstance

VECTOR_STORAGE_LIMIT = 2000
PLATEAU_FLOOR = 1e4 * np.finfo(float).eps


class Variant(str, Enum):
    DR = "DR"
    DR_SWAPPED = "DR_SWAPPED"
    DR_REG = "DR_REG"
    GDR = "GDR"
    PR = "PR"
    GDR_REG = "GDR_REG"
    PR_REG = "PR_REG"
    ADMM2_LBSB = "ADMM2_LBSB"
    CHAMBOLLE_POCK = "CHAMBOLLE_POCK"


_UNIT_RELAXATION = {Variant.DR, Variant.DR_SWAPPED, Variant.DR_REG,
                    Variant.ADMM2_LBSB, Variant.CHAMBOLLE_POCK}
_NEEDS_ALPHA = {Variant.GDR_REG, Variant.PR_REG, Variant.ADMM2_LBSB}
_NO_ALPHA = {Variant.DR, Variant.DR_SWAPPED, Variant.GDR, Variant.PR,
             Variant.CHAMBOLLE_POCK}


@dataclass
class SolverConfig:
    """Which iteration to run and when to stop it.

    ``lam`` is forced to 1 for the Douglas-Rachford family and to 2 for the
    Peaceman-Rachford variants; passing a conflicting value raises.
    """

    variant: Variant
    prox: ProxParams
    lam: Optional[float] = None
    max_iters: int = 100_000
    stop_tol: float = 1e-12
    record_every: int = 1
    store_vectors: Optional[bool] = None
    stall_window: int = 100

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if not isinstance(self.prox, ProxParams):
            self.prox = ProxParams(**self.prox)
        v = self.variant
        if v in _UNIT_RELAXATION:
            forced = 1.0
        elif v in (Variant.PR, Variant.PR_REG):
            forced = 2.0
        else:
            forced = None
        if forced is not None:
            if self.lam is not None and self.lam != forced:
                raise ValueError(f"{v.value} requires lam = {forced}")
            self.lam = forced
        else:
            if self.lam is None:
                raise ValueError(f"{v.value} requires an explicit lam")
            upper_ok = self.lam <= 2.0 if v is Variant.GDR_REG else self.lam < 2.0
            if not (self.lam > 0 and upper_ok):
                raise ValueError(f"lam = {self.lam} outside the admissible range for {v.value}")
        if v in _NEEDS_ALPHA and not self.prox.regularized:
            raise ValueError(f"{v.value} needs a finite alpha")
        if v in _NO_ALPHA and self.prox.regularized:
            raise ValueError(f"{v.value} is unregularized; use a *_REG variant for finite alpha")
        if self.max_iters < 1 or self.record_every < 1:
            raise ValueError("max_iters and record_every must be positive")

    @property
    def gamma(self):
        return self.prox.gamma


@dataclass
class IterateTrace:
    """Recorded iterates and error curves of one run.

    ``iterations`` holds the iteration index of every recorded entry;
    ``steps[k]`` is ``||y^{k+1} - y^k||`` for every iteration regardless of
    ``record_every``.
    """

    iterations: list = field(default_factory=list)
    iterates_y: list = field(default_factory=list)
    iterates_x: list = field(default_factory=list)
    err_y: list = field(default_factory=list)
    err_x: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    converged_at: Optional[int] = None
    stalled: bool = False
    extras: dict = field(default_factory=dict)


@dataclass
class SolveResult:
    x_final: np.ndarray
    y_final: np.ndarray
    trace: IterateTrace
    dual_estimate: Optional[np.ndarray] = None

    @property
    def converged(self):
        return self.trace.converged_at is not None

    @property
    def stalled(self):
        return self.trace.stalled

    @property
    def n_iter(self):
        return len(self.trace.steps)


def _constraint(P):
    if isinstance(P, AffineConstraint):
        return P
    if isinstance(P, ProblemInstance):
        return AffineConstraint(P.A, P.b)
    raise TypeError("expected a ProblemInstance or AffineConstraint")


def _drive(step, state, cfg, *, y_ref=None, x_ref=None, extras=None,
           stall=False, plateau_window=None):
    """Run ``state = step(state)`` under the stopping rules of ``cfg``.

    ``state[0]`` is ``y^k`` and ``state[1]`` is ``x^k``. ``extras`` maps a
    name to a function of the state whose value is recorded alongside.
    """
    y, x = state[0], state[1]
    n = y.size
    store = cfg.store_vectors if cfg.store_vectors is not None else n <= VECTOR_STORAGE_LIMIT
    trace = IterateTrace()
    extras = extras or {}
    for name in extras:
        trace.extras[name] = []

    def record(k, st):
        trace.iterations.append(k)
        if store:
            trace.iterates_y.append(st[0].copy())
            trace.iterates_x.append(st[1].copy())
        if y_ref is not None:
            trace.err_y.append(float(np.linalg.norm(st[0] - y_ref)))
        if x_ref is not None:
            trace.err_x.append(float(np.linalg.norm(st[1] - x_ref)))
        for name, fn in extras.items():
            trace.extras[name].append(fn(st))

    record(0, state)
    best, best_k = math.inf, 0
    k = 0
    for k in range(1, cfg.max_iters + 1):
        new = step(state)
        diff = new[0] - state[0]
        trace.steps.append(float(np.linalg.norm(diff)))
        dinf = float(np.max(np.abs(diff))) if n else 0.0
        state = new
        if k % cfg.record_every == 0:
            record(k, state)
        if dinf <= cfg.stop_tol:
            trace.converged_at = k
            break
        if dinf < best:
            best, best_k = dinf, k
        elif (plateau_window is not None and k - best_k >= plateau_window
              and best <= PLATEAU_FLOOR * max(1.0, float(np.max(np.abs(state[0]))))):
            # roundoff floor reached; the iterate no longer improves. Far above
            # the floor a constant step is a translation phase, not convergence.
            trace.converged_at = k
            break
        elif stall and k - best_k >= cfg.stall_window:
            trace.stalled = True
            break
    if trace.iterations[-1] != k:
        record(k, state)
    return state, trace


def _stall_flag(cfg):
    return cfg.variant is Variant.PR


def solve_dr(P, cfg, y0=None, *, y_ref=None, x_ref=None, **drive_kw):
    """Douglas-Rachford for basis pursuit.

    ``y <- S_gamma(2x - y) + y - x``, ``x <- P(y)``. Also runs ``DR_REG``
    (the soft threshold is scaled by ``c``) so that ``alpha = inf`` reduces to
    plain DR exactly.
    """
    if cfg.variant not in (Variant.DR, Variant.DR_REG):
        raise ValueError(f"solve_dr cannot run {cfg.variant.value}")
    K = _constraint(P)
    A, b, pinv = K.A, K.b, K.pinv_A
    gamma, c = cfg.gamma, cfg.prox.c
    y = np.zeros(A.shape[1]) if y0 is None else np.asarray(y0, dtype=float).copy()
    x = y + pinv @ (b - A @ y)

    if c == 1.0:
        def step(st):
            y, x = st
            y_new = soft_threshold(2 * x - y, gamma) + y - x
            return y_new, y_new + pinv @ (b - A @ y_new)
    else:
        def step(st):
            y, x = st
            y_new = c * soft_threshold(2 * x - y, gamma) + y - x
            return y_new, y_new + pinv @ (b - A @ y_new)

    (y, x), trace = _drive(step, (y, x), cfg, y_ref=y_ref, x_ref=x_ref, **drive_kw)
    return SolveResult(x, y, trace, dual_estimate=(x - y) / gamma)


def solve_dr_reg(P, cfg, y0=None, **kw):
    """Douglas-Rachford on the l2-regularized problem (soft threshold scaled by ``c``)."""
    if cfg.variant is not Variant.DR_REG:
        raise ValueError("solve_dr_reg expects variant DR_REG")
    return solve_dr(P, cfg, y0, **kw)


def solve_dr_swapped(P, cfg, y0=None, *, y_ref=None, x_ref=None, **drive_kw):
    """Douglas-Rachford with the roles of the two functions exchanged.

    ``y <- x + A^+(b - A(2x - y))``, ``x <- S_gamma(y)``.
    """
    if cfg.variant is not Variant.DR_SWAPPED:
        raise ValueError("solve_dr_swapped expects variant DR_SWAPPED")
    K = _constraint(P)
    A, b, pinv = K.A, K.b, K.pinv_A
    gamma = cfg.gamma
    y = np.zeros(A.shape[1]) if y0 is None else np.asarray(y0, dtype=float).copy()
    x = soft_threshold(y, gamma)

    def step(st):
        y, x = st
        z = 2 * x - y
        y_new = x + pinv @ (b - A @ z)
        return y_new, soft_threshold(y_new, gamma)

    (y, x), trace = _drive(step, (y, x), cfg, y_ref=y_ref, x_ref=x_ref, **drive_kw)
    return SolveResult(x, y, trace, dual_estimate=(y - x) / gamma)


def solve_gdr(P, cfg, y0=None, *, y_ref=None, x_ref=None, **drive_kw):
    """Relaxed Douglas-Rachford with constant ``lam`` (``lam = 2``: Peaceman-Rachford).

    ``y <- y + lam [S_gamma(2x - y) - x]``. The x-update is the affine
    projection, or for the regularized variants the resolvent of the affine
    indicator plus ``||x||^2 / (2 alpha)``.

    Unregularized PR can fail to converge; a run whose step norm has not set
    a new minimum for ``cfg.stall_window`` iterations is stopped and flagged
    as stalled.
    """
    if cfg.variant not in (Variant.GDR, Variant.PR, Variant.GDR_REG, Variant.PR_REG):
        raise ValueError(f"solve_gdr cannot run {cfg.variant.value}")
    K = _constraint(P)
    A, b, pinv = K.A, K.b, K.pinv_A
    gamma, lam, c = cfg.gamma, cfg.lam, cfg.prox.c
    y = np.zeros(A.shape[1]) if y0 is None else np.asarray(y0, dtype=float).copy()

    if c == 1.0:
        def resolvent_g(v):
            return v + pinv @ (b - A @ v)
    else:
        def resolvent_g(v):
            return c * v + pinv @ (b - c * (A @ v))

    def step(st):
        y, x = st
        y_new = y + lam * (soft_threshold(2 * x - y, gamma) - x)
        return y_new, resolvent_g(y_new)

    drive_kw.setdefault("stall", _stall_flag(cfg))
    (y, x), trace = _drive(step, (y, resolvent_g(y)), cfg, y_ref=y_ref, x_ref=x_ref,
                           **drive_kw)
    return SolveResult(x, y, trace, dual_estimate=(x - y) / gamma)


def lbsb_start_from_dr(P, gamma, y0):
    """Starting triple ``(z0, w0, x0)`` for LB-SB that reproduces DR from ``y0``.

    With ``x0 = P(y0)`` and ``A^T z0 = (P(y0) - y0) / gamma`` the LB-SB
    sequence ``x^{k-1} - gamma w^k`` equals the DR sequence ``y^k`` for
    ``k >= 1``, and ``y^0 = x0 - gamma A^T z0 = y0``. ``w0`` does not enter
    the iteration and is returned as zeros.
    """
    K = _constraint(P)
    y0 = np.asarray(y0, dtype=float)
    resid = K.b - K.A @ y0
    x0 = y0 + K.pinv_A @ resid
    z0 = np.linalg.solve(K.A @ K.A.T, resid) / gamma
    return z0, np.zeros_like(y0), x0


def solve_lbsb(P, cfg, z0=None, w0=None, x0=None, *, y_ref=None, x_ref=None, **drive_kw):
    """Dual split Bregman (ADMM2 ordering) on the dual of regularized basis pursuit.

    ``w <- argmin (alpha/2) dist(w, [-1,1]^n)^2 + (gamma/2)||x/gamma + A^T z - w||^2``,
    ``z <- argmin -b^T z + (gamma/2)||x/gamma + A^T z - w||^2``,
    ``x <- x + gamma (A^T z - w)``.

    The trace's ``y`` sequence is ``x^{k-1} - gamma w^k``; ``extras['t']``
    holds ``alpha S_1(A^T z^k)``, the primal estimate used by LB-SB itself.
    """
    if cfg.variant is not Variant.ADMM2_LBSB:
        raise ValueError("solve_lbsb expects variant ADMM2_LBSB")
    K = _constraint(P)
    A, b = K.A, K.b
    m, n = A.shape
    gamma, alpha, c = cfg.gamma, cfg.prox.alpha, cfg.prox.c
    chol = scipy.linalg.cho_factor(A @ A.T)

    z = np.zeros(m) if z0 is None else np.asarray(z0, dtype=float).copy()
    w = np.zeros(n) if w0 is None else np.asarray(w0, dtype=float).copy()
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    Atz = A.T @ z
    # x^k - gamma A^T z^k equals x^{k-1} - gamma w^k after every step
    y = x - gamma * Atz

    def step(st):
        _, x, z, w, Atz = st
        v = x / gamma + Atz
        w_new = v - c * soft_threshold(v, 1.0)
        z_new = scipy.linalg.cho_solve(chol, (b - A @ x) / gamma + A @ w_new)
        Atz_new = A.T @ z_new
        x_new = x + gamma * (Atz_new - w_new)
        return x - gamma * w_new, x_new, z_new, w_new, Atz_new

    extras = {"t": lambda st: alpha * soft_threshold(st[4], 1.0)}
    state, trace = _drive(step, (y, x, z, w, Atz), cfg, y_ref=y_ref, x_ref=x_ref,
                          extras=extras, **drive_kw)
    y, x, z, w, _ = state
    trace.extras["z_final"] = z
    return SolveResult(x, y, trace, dual_estimate=w)


def cp_start_from_dr(P, gamma, y0):
    """``(x0, w0)`` for Chambolle-Pock matching DR started at ``y0``."""
    K = _constraint(P)
    y0 = np.asarray(y0, dtype=float)
    x0 = y0 + K.correction(y0)
    return x0, (x0 - y0) / gamma


def solve_chambolle_pock(P, cfg, x0=None, w0=None, *, y_ref=None, x_ref=None, **drive_kw):
    """Chambolle-Pock primal-dual form of DR for basis pursuit.

    ``w <- proj_[-1,1](w + (2x^k - x^{k-1}) / gamma)``, ``x <- P(x - gamma w)``,
    where the first line is the resolvent of the conjugate of ``||.||_1``
    (via Moreau's identity). The previous iterate ``x^{-1}`` is taken equal to
    ``x0``. The trace's ``y`` sequence is ``x^{k-1} - gamma w^k``; the dual
    estimate is the final ``w``.
    """
    if cfg.variant is not Variant.CHAMBOLLE_POCK:
        raise ValueError("solve_chambolle_pock expects variant CHAMBOLLE_POCK")
    K = _constraint(P)
    A, b, pinv = K.A, K.b, K.pinv_A
    n = A.shape[1]
    gamma = cfg.gamma
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    w = np.zeros(n) if w0 is None else np.asarray(w0, dtype=float).copy()
    y = x - gamma * w

    def step(st):
        _, x, w, x_prev = st
        w_new = project_box(w + (2 * x - x_prev) / gamma)
        v = x - gamma * w_new
        return v, v + pinv @ (b - A @ v), w_new, x

    extras = {"w": lambda st: st[2].copy()} if drive_kw.pop("record_dual", False) else None
    state, trace = _drive(step, (y, x, w, x), cfg, y_ref=y_ref, x_ref=x_ref,
                          extras=extras, **drive_kw)
    y, x, w, _ = state
    return SolveResult(x, y, trace, dual_estimate=w)


def solve(P, cfg, y0=None, **kw):
    """Run the solver for ``cfg.variant`` starting from the DR point ``y0``.

    The dual-form variants are started so that their reconstructed ``y``
    sequence coincides with DR's from ``y0``.
    """
    v = cfg.variant
    if v in (Variant.DR, Variant.DR_REG):
        return solve_dr(P, cfg, y0, **kw)
    if v is Variant.DR_SWAPPED:
        return solve_dr_swapped(P, cfg, y0, **kw)
    if v in (Variant.GDR, Variant.PR, Variant.GDR_REG, Variant.PR_REG):
        return solve_gdr(P, cfg, y0, **kw)
    K = _constraint(P)
    if y0 is None:
        y0 = np.zeros(K.A.shape[1])
    if v is Variant.ADMM2_LBSB:
        z0, w0, x0 = lbsb_start_from_dr(K, cfg.gamma, y0)
        return solve_lbsb(K, cfg, z0, w0, x0, **kw)
    x0, w0 = cp_start_from_dr(K, cfg.gamma, y0)
    return solve_chambolle_pock(K, cfg, x0, w0, **kw)


def reference_fixed_point(P, cfg, y0=None, max_iters=None):
    """High-precision fixed point reached by ``cfg``'s own iteration from ``y0``.

    Runs for up to ``max(10 * cfg.max_iters, 50000)`` iterations (or
    ``max_iters``) at ``stop_tol = 1e-14``, also stopping once the step norm
    has sat at the roundoff floor for 20 iterations (iterating longer only
    lets rounding bias drift the iterate along the eigenvalue-1 subspace).
    """
    if max_iters is None:
        max_iters = max(10 * cfg.max_iters, 50_000)
    ref_cfg = SolverConfig(cfg.variant, cfg.prox, lam=cfg.lam, max_iters=max_iters,
                           stop_tol=1e-14, record_every=max_iters, store_vectors=False,
                           stall_window=cfg.stall_window)
    return solve(P, ref_cfg, y0, plateau_window=20)


def _usable_prefix(err, floor):
    err = np.asarray(err, dtype=float)
    below = np.flatnonzero(err <= floor)
    end = below[0] if below.size else err.size
    return end


def fit_asymptotic_slope(trace, window=None, floor=None):
    """Per-iteration asymptotic rate ``exp(slope)`` of ``log err_y``.

    Least squares over the trailing ``window`` recorded entries that precede
    the first drop below the noise floor (default ``10 eps max(err_y)``).
    ``window`` defaults to half of the usable entries.
    """
    err = np.asarray(trace.err_y, dtype=float)
    k = np.asarray(trace.iterations[: err.size], dtype=float)
    if err.size == 0:
        raise InsufficientRegimeError("insufficient linear regime: no error curve recorded")
    if floor is None:
        floor = 10 * np.finfo(float).eps * float(np.max(err))
    end = _usable_prefix(err, floor)
    if window is None:
        window = max(3, end // 2)
    start = max(0, end - window)
    if end - start < 3:
        raise InsufficientRegimeError("insufficient linear regime")
    slope = np.polyfit(k[start:end], np.log(err[start:end]), 1)[0]
    return float(np.exp(slope))
