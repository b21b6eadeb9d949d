"""Experiment engine: instances, uniqueness certificates, rate reports and sweeps."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .exceptions import (BPSplitError, InsufficientRegimeError, NongenericFaceError,
                         NotAFixedPointError, UniquenessError)
from .io import load_matrix, load_vector
from .linalg import matrix_rank
from .operators import AffineConstraint, ProxParams
from .problem import ProblemInstance, SupportInfo
from .rate_theory import (FixedPointKind, _rho_quadratic, boundary_rate, build_T_c,
                          build_T_c_lambda, classify_face_behaviour,
                          compute_fixed_point_info, compute_geometry, lambda_star,
                          optimal_parameters, rho_closed_form, rho_gdr_closed_form,
                          spectral_rate, synthetic_geometry)
from .solvers import SolverConfig, Variant, reference_fixed_point, solve

TAU_CERT = 1e-6
MAX_ATTEMPTS = 20
MIN_MAGNITUDE = 0.1
REGIME_TOL = 0.05

_REG_F = {Variant.DR_REG, Variant.ADMM2_LBSB}


# ---------------------------------------------------------------- instances

def real_fourier_matrix(n):
    """Orthonormal real Fourier basis of ``R^n`` as rows (cosines, then sines)."""
    t = np.arange(n)
    rows = [np.full(n, 1.0 / math.sqrt(n))]
    for j in range(1, (n + 1) // 2):
        rows.append(math.sqrt(2.0 / n) * np.cos(2 * math.pi * j * t / n))
        rows.append(math.sqrt(2.0 / n) * np.sin(2 * math.pi * j * t / n))
    if n % 2 == 0:
        rows.append(np.cos(math.pi * t) / math.sqrt(n))
    return np.vstack(rows)


def _sample_matrix(rng, m, n, distribution, rows):
    if distribution == "gaussian":
        return rng.standard_normal((m, n))
    if distribution == "fourier":
        F = real_fourier_matrix(n)
        idx = np.asarray(rows, dtype=int) if rows is not None else \
            np.sort(rng.choice(n, size=m, replace=False))
        if idx.size != m:
            raise ValueError(f"expected {m} Fourier row indices, got {idx.size}")
        return F[idx]
    raise ValueError(f"unknown distribution {distribution!r}")


def _sample_values(rng, k):
    v = rng.standard_normal(k)
    small = np.abs(v) < MIN_MAGNITUDE
    while small.any():
        v[small] = rng.standard_normal(int(small.sum()))
        small = np.abs(v) < MIN_MAGNITUDE
    return v


def bp_minimizer(A, b):
    """A minimizer of ``||x||_1`` s.t. ``Ax = b`` by linear programming.

    The LP vertex is polished by solving ``A_S x_S = b`` on its support.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    res = linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=b,
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise UniquenessError(f"linear program failed: {res.message}")
    x = res.x[:n] - res.x[n:]
    return polish_on_support(A, b, x)


def polish_on_support(A, b, x, rel_tol=1e-9):
    """Zero entries below ``rel_tol * max|x|`` and re-solve exactly on the support."""
    x = np.asarray(x, dtype=float).copy()
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if scale == 0:
        return np.zeros_like(x)
    supp = np.flatnonzero(np.abs(x) > rel_tol * scale)
    AS = A[:, supp]
    if matrix_rank(AS) < supp.size:
        return x
    out = np.zeros_like(x)
    out[supp] = np.linalg.lstsq(AS, b, rcond=None)[0]
    return out


@dataclass(frozen=True)
class UniquenessCertificate:
    """Outcome of the strict dual-certificate test.

    ``t`` is the smallest attainable ``max |eta_j|`` off the support, over
    ``eta`` in ``R(A^T)`` matching the sign pattern on the support.
    """

    unique: bool
    marginal: bool
    eta: Optional[np.ndarray]
    t: float
    reason: str = ""


def verify_uniqueness(P, S, tau=TAU_CERT):
    """Certify that ``x*`` with support ``S`` is the unique basis pursuit solution.

    Requires ``A_S`` of full column rank and a strict certificate
    ``eta = A^T z`` with ``eta_S = sgn(x*_S)`` and ``max |eta_off| < 1 - tau``.
    The minimal off-support norm is found by a linear program in ``(z, t)``;
    a value within ``tau`` of 1 is reported as marginal.
    """
    A = P.A
    m, n = A.shape
    sup, off = S.support, S.zero_indices
    if sup.size == 0:
        return UniquenessCertificate(True, False, np.zeros(n), 0.0)
    if matrix_rank(A[:, sup]) < sup.size:
        return UniquenessCertificate(False, False, None, math.inf,
                                     "support columns are linearly dependent")
    signs = S.sign_pattern[sup]
    if off.size == 0:
        z = np.linalg.lstsq(A[:, sup].T, signs, rcond=None)[0]
        return UniquenessCertificate(True, False, A.T @ z, 0.0)
    Aoff = A[:, off].T
    ones = np.ones((off.size, 1))
    A_ub = np.vstack([np.hstack([Aoff, -ones]), np.hstack([-Aoff, -ones])])
    A_eq = np.hstack([A[:, sup].T, np.zeros((sup.size, 1))])
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(2 * off.size), A_eq=A_eq, b_eq=signs,
                  bounds=[(None, None)] * m + [(0, None)], method="highs")
    if res.status != 0:
        return UniquenessCertificate(False, False, None, math.inf,
                                     "no certificate matches the sign pattern")
    z, t = res.x[:m], float(res.x[-1])
    eta = A.T @ z
    if t < 1 - tau:
        return UniquenessCertificate(True, False, eta, t)
    if t <= 1 + tau:
        return UniquenessCertificate(False, True, eta, t, "marginal")
    return UniquenessCertificate(False, False, eta, t, "x* is not a minimizer")


def generate_instance(m, n, k, seed=None, distribution="gaussian", rows=None,
                      max_attempts=MAX_ATTEMPTS):
    """Random basis pursuit instance with a certified unique solution.

    ``A`` has i.i.d. entries (``distribution='gaussian'``) or is a set of
    rows of the real Fourier basis (``'fourier'``, rows given explicitly or
    drawn from ``seed``). A ``k``-sparse vector with entries of magnitude at
    least 0.1 is planted and ``b = A x``. If the planted vector is not the
    certified unique minimizer, the actual minimizer of the same ``b`` is
    computed and certified instead; failing both, ``A`` is resampled.

    Returns
    -------
    P : ProblemInstance
    S : SupportInfo
    """
    if not 0 <= k <= m <= n:
        raise ValueError("need 0 <= k <= m <= n")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        A = _sample_matrix(rng, m, n, distribution, rows)
        x = np.zeros(n)
        x[rng.choice(n, size=k, replace=False)] = _sample_values(rng, k)
        b = A @ x
        if matrix_rank(A) < m:
            continue
        for cand in (x, None):
            if cand is None:
                if k == 0:
                    break
                try:
                    cand = bp_minimizer(A, b)
                except UniquenessError:
                    break
            P = ProblemInstance(A, b, cand)
            S = SupportInfo.from_solution(cand)
            if verify_uniqueness(P, S).unique:
                return P, S
    raise UniquenessError("could not certify uniqueness")


# ------------------------------------------------------------ slope fitting

@dataclass(frozen=True)
class LinearRegime:
    rate: float
    start: int
    end: int

    @property
    def window(self):
        return self.end - self.start


def _slope(k, e):
    return float(np.polyfit(k, np.log(e), 1)[0])


def detect_linear_regime(iterations, err, floor=None, tol=REGIME_TOL, min_points=5):
    """Trailing window on which ``log err`` is a straight line.

    Considers entries before ``err`` first falls to ``floor`` (default
    ``1e-9 max(err)``, above the accuracy of reference fixed points). Windows
    ending there are tried from longest to shortest; the first whose two
    halves have slopes within ``tol`` (relative) is the linear regime, and
    the rate is fitted on its trailing half.

    Raises
    ------
    InsufficientRegimeError
        "transient only" when no window qualifies.
    """
    err = np.asarray(err, dtype=float)
    k = np.asarray(iterations, dtype=float)[: err.size]
    if floor is None:
        floor = 1e-9 * float(np.max(err)) if err.size else 0.0
    below = np.flatnonzero(err <= floor)
    end = int(below[0]) if below.size else err.size
    size = end
    while size >= min_points:
        start = end - size
        half = start + size // 2
        s1, s2 = _slope(k[start:half], err[start:half]), _slope(k[half:end], err[half:end])
        if s2 < 0 and abs(s1 - s2) <= tol * abs(s2):
            # fit the later half: closest to the asymptote, and free of the
            # polynomial bias a defective iteration matrix adds early on
            start = end - max(min_points, size // 2)
            return LinearRegime(float(np.exp(_slope(k[start:end], err[start:end]))),
                                start, end)
        size = int(size * 0.75)
    raise InsufficientRegimeError("transient only")


# --------------------------------------------------------------- experiments

@dataclass
class ExperimentSpec:
    """Declarative description of an experiment (loadable from JSON).

    ``instance`` holds either file paths (``matrix``, ``rhs``, optional
    ``x_star``) or generator parameters (``m``, ``n``, ``k``, ``seed``,
    ``distribution``, optional ``rows``). Each entry of ``configs`` has
    ``variant``, ``gamma`` and optionally ``alpha``, ``lambda``,
    ``max_iters``, ``stop_tol`` and ``y0`` (``"zero"`` or an integer seed
    for a Gaussian start).
    """

    instance: dict
    configs: list
    reference_max_iters: Optional[int] = None
    sweep: Optional[dict] = None
    output_dir: Optional[str] = None
    tolerance: float = 1e-2

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        ref = d.pop("reference", {}) or {}
        if "max_iters" in ref:
            d.setdefault("reference_max_iters", ref["max_iters"])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        spec = cls(**d)
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def validate(self):
        if not isinstance(self.configs, list) or not self.configs:
            raise ValueError("experiment needs at least one solver config")
        for cfg in self.configs:
            if "variant" not in cfg or "gamma" not in cfg:
                raise ValueError("each config needs 'variant' and 'gamma'")
        if self.sweep:
            for key, lo, hi in (("c_grid", 0.0, 1.0), ("lambda_grid", 0.0, 2.0)):
                grid = np.asarray(self.sweep.get(key, []), dtype=float)
                if grid.size and (grid.min() <= lo or grid.max() > hi):
                    raise ValueError(f"{key} must lie in ({lo}, {hi}]")

    def load_instance(self):
        inst = self.instance
        if "matrix" in inst:
            A = load_matrix(inst["matrix"])
            b = load_vector(inst["rhs"])
            x = load_vector(inst["x_star"]) if inst.get("x_star") else bp_minimizer(A, b)
            P = ProblemInstance(A, b, x)
            return P, SupportInfo.from_solution(x)
        return generate_instance(inst["m"], inst["n"], inst["k"], seed=inst.get("seed"),
                                 distribution=inst.get("distribution", "gaussian"),
                                 rows=inst.get("rows"))


@dataclass
class RateRow:
    variant: str
    gamma: float
    alpha: float
    c: float
    lam: float
    predicted: float
    spectral: float
    fitted: float
    gap: float
    kind: str
    face_cases: str
    iters_to_1e10: Optional[int]
    status: str
    message: str = ""


REPORT_FIELDS = list(RateRow.__dataclass_fields__)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


@dataclass
class RateReport:
    rows: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    @property
    def all_pass(self):
        return all(r.status == "PASS" for r in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for r in self.rows:
            w.writerow([_fmt(v) for v in asdict(r).values()])
        return buf.getvalue()

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.to_csv())
        for name, text in self.curves.items():
            (out / name).write_text(text)


def error_curve_csv(iterations, err_y, err_x):
    """CSV with header ``k,err_y,err_x,log_err_y`` and one row per recorded iteration."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "err_y", "err_x", "log_err_y"])
    for i, k in enumerate(iterations):
        ey = err_y[i]
        ex = err_x[i] if i < len(err_x) else math.nan
        w.writerow([k, repr(ey), repr(ex), repr(math.log(ey)) if ey > 0 else "-inf"])
    return buf.getvalue()


def _start(P, y0):
    if y0 is None or y0 == "zero":
        return np.zeros(P.n)
    if isinstance(y0, (list, tuple, np.ndarray)):
        return np.asarray(y0, dtype=float)
    return np.random.default_rng(int(y0)).standard_normal(P.n)


def make_config(d, default_max_iters=100_000):
    alpha = d.get("alpha")
    alpha = math.inf if alpha in (None, "inf", math.inf) else float(alpha)
    return SolverConfig(Variant(d["variant"]), ProxParams(float(d["gamma"]), alpha),
                        lam=d.get("lambda"), max_iters=int(d.get("max_iters", default_max_iters)),
                        stop_tol=float(d.get("stop_tol", 1e-12)))


def predict_linear_rate(variant, K, S, c, lam):
    """Predicted asymptotic rate of ``variant`` for zero set ``S``.

    Returns ``(closed_form, spectral)``. The closed form is evaluated at the
    leading angle; for regularized variants with ``theta_1 > pi/4`` it falls
    back to the spectral value. The two can also differ when a secondary
    angle exceeds ``pi/4``, where the closed form's root is no longer the
    largest in modulus; callers should then trust the spectral value.
    """
    variant = Variant(variant)
    geom = compute_geometry(K, S)
    if geom.nullspaces_intersect:
        raise NongenericFaceError("nullspaces intersect; no linear rate")
    theta = geom.theta1
    if variant in _REG_F and c < 1:
        T = build_T_c(S, K, c)
    else:
        T = build_T_c_lambda(S, K, c, lam)
    spec = spectral_rate(T, geom)
    if c < 1 and theta > math.pi / 4:
        return spec, spec
    return _rho_quadratic(theta, c, lam), spec


def _fit_regime(trace):
    """Linear regime of ``err_y`` above the plateau left by the reference.

    Once converged, rounding makes the iterate creep along the eigenvalue-1
    subspace by about one final step norm per iteration, which bounds the
    accuracy of the reference. The fit stops at 100 final step norms, at 30
    times the last recorded error, and never below ``1e-13`` relative.
    """
    err = np.asarray(trace.err_y, dtype=float)
    last_step = float(trace.steps[-1]) if trace.steps else 0.0
    floor = max(1e-13 * float(np.max(err)), 30.0 * float(err[-1]), 100.0 * last_step)
    try:
        return detect_linear_regime(trace.iterations, err, floor=floor)
    except InsufficientRegimeError:
        if floor >= 1e-9 * float(np.max(err)):
            raise
        return detect_linear_regime(trace.iterations, err)


def _threshold_inputs(variant, trace, start, end):
    Y = np.asarray(trace.iterates_y[start:end])
    if variant is Variant.DR_SWAPPED:
        return Y
    return 2 * np.asarray(trace.iterates_x[start:end]) - Y


def analyze_run(P, S, cfg, y0, reference_max_iters=None, tolerance=1e-2):
    """Reference run, measured run, fit and prediction for one configuration.

    Returns ``(RateRow, curve_csv_text)``.
    """
    v = cfg.variant
    K = AffineConstraint(P.A, P.b)
    ref = reference_fixed_point(P, cfg, y0, max_iters=reference_max_iters)
    y_star, x_ref = ref.y_final, ref.x_final
    common = dict(variant=v.value, gamma=cfg.gamma, alpha=cfg.prox.alpha, c=cfg.prox.c,
                  lam=cfg.lam)
    if not ref.converged:
        return RateRow(**common, predicted=math.nan, spectral=math.nan, fitted=math.nan,
                       gap=math.nan, kind="", face_cases="", iters_to_1e10=None,
                       status="UNCONVERGED",
                       message="stalled" if ref.stalled else "reference did not converge"), ""
    x_sol = polish_on_support(P.A, P.b, x_ref)
    S_run = SupportInfo.from_solution(x_sol)
    # the measured run goes as deep as the reference so the fit sees the tail
    deep = replace(cfg, stop_tol=min(cfg.stop_tol, 1e-14))
    run = solve(P, deep, y0, y_ref=y_star, x_ref=x_ref, plateau_window=20)
    tr = run.trace
    curve = error_curve_csv(tr.iterations, tr.err_y, tr.err_x)
    hit = [k for k, e in zip(tr.iterations, tr.err_y) if e <= 1e-10]
    iters = hit[0] if hit else None
    row = dict(common, iters_to_1e10=iters, kind="", face_cases="", predicted=math.nan,
               spectral=math.nan, fitted=math.nan, gap=math.nan)
    try:
        regime = _fit_regime(tr)
    except InsufficientRegimeError as exc:
        # superlinear or immediate convergence leaves no line to fit
        return RateRow(**row, status="TRANSIENT", message=str(exc)), curve
    row["fitted"] = regime.rate

    # fixed-point classification on the solution the run converged to
    y_eff = 2 * x_sol - y_star if v is Variant.DR_SWAPPED else y_star
    term = "f" if v in _REG_F else "g"
    try:
        info = compute_fixed_point_info(ProblemInstance(P.A, P.b, x_sol), S_run, cfg.gamma,
                                        y_eff, alpha=cfg.prox.alpha, regularized_term=term)
    except NotAFixedPointError as exc:
        return RateRow(**row, status="ERROR", message=str(exc)), curve
    row["kind"] = info.kind.value
    S_eff = S_run
    if info.kind is FixedPointKind.BOUNDARY:
        if not tr.iterates_y:
            return RateRow(**row, status="NOPRED", message="vectors not stored"), curve
        Z = _threshold_inputs(v, tr, regime.start, regime.end)
        cases = classify_face_behaviour(Z, info.face_indices, cfg.gamma)
        row["face_cases"] = ";".join(f"{j}:{c}" for j, c in cases.items())
        if "III" in cases.values():
            return RateRow(**row, status="NONGENERIC", message="mixed face behaviour"), curve
        removed = [j for j, c in cases.items() if c == "II"]
        if removed:
            try:
                boundary_rate(S_run, K, removed)
            except NongenericFaceError as exc:
                return RateRow(**row, status="NONGENERIC", message=str(exc)), curve
            S_eff = S_run.without(removed)
    try:
        pred, spec = predict_linear_rate(v, K, S_eff, cfg.prox.c, cfg.lam)
    except NongenericFaceError as exc:
        return RateRow(**row, status="NOPRED", message=str(exc)), curve
    message = ""
    if abs(pred - spec) > 1e-8:
        # a secondary angle beyond pi/4 can dominate under relaxation
        pred, message = spec, "closed form at theta_1 not dominant; spectral rate used"
    gap = abs(regime.rate - pred)
    row.update(predicted=pred, spectral=spec, gap=gap)
    return RateRow(**row, status="PASS" if gap <= tolerance else "FAIL", message=message), curve


def run_experiment(spec):
    """Run every configuration of ``spec`` and assemble a :class:`RateReport`.

    Failures of single runs are recorded as rows with status ERROR.
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    P, S = spec.load_instance()
    report = RateReport()
    for i, d in enumerate(spec.configs):
        name = f"run_{i:02d}_{d['variant']}.csv"
        try:
            cfg = make_config(d)
            row, curve = analyze_run(P, S, cfg, _start(P, d.get("y0")),
                                     spec.reference_max_iters, spec.tolerance)
        except (BPSplitError, ValueError, np.linalg.LinAlgError) as exc:
            row = RateRow(d["variant"], float(d["gamma"]), math.nan, math.nan, math.nan,
                          math.nan, math.nan, math.nan, math.nan, "", "", None, "ERROR",
                          str(exc))
            curve = ""
        report.rows.append(row)
        if curve:
            report.curves[name] = curve
    if spec.sweep and "theta" in spec.sweep:
        table = sweep_rates(spec.sweep["theta"], spec.sweep.get("c_grid", [1.0]),
                            spec.sweep.get("lambda_grid", [1.0]))
        report.curves["sweep.csv"] = table.to_csv()
    if spec.output_dir:
        report.write(spec.output_dir)
    return report


# -------------------------------------------------------------------- sweeps

@dataclass
class SweepTable:
    theta1: float
    rows: list
    c_star: float
    c_sharp: float
    c_bar: float
    max_spectral_gap: float

    FIELDS = ("c", "lambda", "rho", "rho_dr", "lambda_star", "near_c_star",
              "near_c_sharp", "near_c_bar", "near_lambda_star")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        for r in self.rows:
            w.writerow([_fmt(r[f]) for f in self.FIELDS])
        return buf.getvalue()

    def column(self, name):
        return np.array([r[name] for r in self.rows])


def parse_grid(text):
    """``'a:b:step'`` to the inclusive grid ``a, a+step, ..., b``."""
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"grid must look like a:b:step, got {text!r}") from exc
    if step <= 0 or b < a:
        raise ValueError("grid needs step > 0 and b >= a")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return np.round(a + step * np.arange(count), 12)


def _nearest(grid, value):
    grid = np.asarray(grid, dtype=float)
    return float(grid[np.argmin(np.abs(grid - value))])


def sweep_rates(theta1, c_grid, lambda_grid, n_checks=5, rng=0):
    """Closed-form rates over a ``(c, lambda)`` grid, spot-checked spectrally.

    Marker columns flag the grid point nearest ``c*``, ``c_sharp`` and
    ``c_bar`` and, per ``c``, the ``lambda`` nearest ``lambda*(c)``.
    ``n_checks`` random grid points are recomputed from the iteration matrix
    of a synthetic geometry with leading angle ``theta1``.
    """
    c_grid = np.asarray(c_grid, dtype=float)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    p = optimal_parameters(theta1)
    near = {k: _nearest(c_grid, getattr(p, k)) for k in ("c_star", "c_sharp", "c_bar")}
    rows = []
    for c in c_grid:
        ls = lambda_star(theta1, c)
        l_near = _nearest(lambda_grid, ls)
        for lam in lambda_grid:
            rows.append({"c": float(c), "lambda": float(lam),
                         "rho": rho_gdr_closed_form(theta1, c, lam),
                         "rho_dr": rho_closed_form(theta1, c), "lambda_star": ls,
                         "near_c_star": bool(c == near["c_star"]),
                         "near_c_sharp": bool(c == near["c_sharp"]),
                         "near_c_bar": bool(c == near["c_bar"]),
                         "near_lambda_star": bool(lam == l_near)})
    gen = np.random.default_rng(rng)
    A, S = synthetic_geometry([theta1], n_extra=1, n_intersection=1, rng=gen)
    geom = compute_geometry(A, S)
    worst = 0.0
    for i in gen.choice(len(rows), size=min(n_checks, len(rows)), replace=False):
        r = rows[i]
        spec = spectral_rate(build_T_c_lambda(S, A, r["c"], r["lambda"]), geom)
        worst = max(worst, abs(spec - r["rho"]))
    if worst > 1e-10:
        raise ArithmeticError(f"closed form and spectral rates disagree by {worst:.2e}")
    return SweepTable(theta1, rows, p.c_star, p.c_sharp, p.c_bar, worst)
