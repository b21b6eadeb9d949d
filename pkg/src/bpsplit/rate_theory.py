"""Predicted asymptotic rates of the splitting iterations.

Near a fixed point whose soft-threshold input keeps the sign pattern of the
solution, every iteration in :mod:`bpsplit.solvers` acts as a linear map on
the error. This module builds those iteration matrices, evaluates their
spectral radius on the complement of their eigenvalue-1 eigenspace, and
compares it with the closed-form rates in the leading principal angle
between ``N(A)`` and ``N(B)``, ``B`` selecting the zero entries of the
solution.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .exceptions import EnumerationTooLargeError, NongenericFaceError, NotAFixedPointError
from .linalg import (PrincipalAngles, SubspaceBasis, nullspace_basis, orthogonal_complement,
                     orthonormal_span, principal_angles, range_basis,
                     smallest_eig_inverse_gram)
from .operators import AffineConstraint
from .problem import ProblemInstance, SupportInfo

# re-exported so callers can import the problem types from here
__all__ = [
    "ProblemInstance", "SupportInfo", "SubspaceGeometry", "RatePrediction", "RateSource",
    "FixedPointInfo", "FixedPointKind", "OptimalParameters", "compute_geometry",
    "build_T", "build_T_swapped", "build_T_c", "build_T_c_lambda", "spectral_rate",
    "rho_closed_form", "rho_gdr_closed_form", "rho_optimal_relaxation",
    "optimal_parameters", "lambda_star", "predict_rate", "compute_fixed_point_info",
    "boundary_rate", "classify_face_behaviour", "rip_bound", "check_rip_bound",
    "synthetic_geometry", "RipBound",
]

TAU_FACE = 1e-6
MAX_SUPPORTS = 10**6


def _as_constraint(K):
    if isinstance(K, AffineConstraint):
        return K
    if isinstance(K, ProblemInstance):
        return AffineConstraint(K.A, K.b)
    A = np.atleast_2d(np.asarray(K, dtype=float))
    return AffineConstraint(A, np.zeros(A.shape[0]))


@dataclass(frozen=True)
class SubspaceGeometry:
    """Orthonormal bases for ``N(A), R(A^T), N(B), R(B^T)`` and their angles.

    ``complement`` spans ``N(A) + N(B)``, the orthogonal complement of
    ``R(A^T) ∩ R(B^T)``.
    """

    A0: SubspaceBasis
    A1: SubspaceBasis
    B0: SubspaceBasis
    B1: SubspaceBasis
    theta: PrincipalAngles
    complement: SubspaceBasis
    dim_intersection_ranges: int

    @property
    def theta1(self):
        return self.theta.first

    @property
    def nullspaces_intersect(self):
        """True when ``N(A) ∩ N(B) != {0}``."""
        return self.A0.dim + self.B0.dim > self.complement.dim


def compute_geometry(K, S):
    K = _as_constraint(K)
    A0, A1 = nullspace_basis(K.A), range_basis(K.A)
    B0, B1 = nullspace_basis(S.B), range_basis(S.B)
    complement = orthonormal_span(A0, B0)
    return SubspaceGeometry(A0, A1, B0, B1, principal_angles(A0, B0), complement,
                            S.n - complement.dim)


def _projectors(S, K):
    K = _as_constraint(K)
    PA = K.pinv_A @ K.A
    PB = np.zeros((S.n, S.n))
    PB[S.zero_indices, S.zero_indices] = 1.0
    return PA, PB


def build_T(S, K):
    """``(I - B^+B)(I - A^+A) + B^+B A^+A``: the linearized DR map."""
    PA, PB = _projectors(S, K)
    eye = np.eye(S.n)
    return (eye - PB) @ (eye - PA) + PB @ PA


def build_T_swapped(S, K):
    """Linearization of DR with the two functions exchanged."""
    PA, PB = _projectors(S, K)
    eye = np.eye(S.n)
    return (eye - PA) @ (eye - PB) + PA @ PB


def build_T_c(S, K, c):
    """``c T + (1 - c) A^+A``: linearized DR on the regularized problem."""
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    PA, _ = _projectors(S, K)
    return c * build_T(S, K) + (1.0 - c) * PA


def build_T_c_lambda(S, K, c, lam):
    """Linearized relaxed DR whose x-update carries the l2 term.

    ``I + lam [(I - B^+B)(2c(I - A^+A) - I) - c(I - A^+A)]``, which equals
    ``(1 - lam) I + lam [c T + (1 - c) B^+B]``. With ``c = 1`` this is the
    unregularized relaxed matrix ``(1 - lam) I + lam T``.
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    if not 0 < lam <= 2:
        raise ValueError("lam must lie in (0, 2]")
    PA, PB = _projectors(S, K)
    eye = np.eye(S.n)
    N = eye - PA
    return eye + lam * ((eye - PB) @ (2 * c * N - eye) - c * N)


def spectral_rate(T, geometry):
    """Largest eigenvalue modulus of ``T`` restricted to ``N(A) + N(B)``.

    That subspace is the invariant complement of the eigenvalue-1
    eigenspace ``R(A^T) ∩ R(B^T)``; restricting by projection avoids having
    to separate eigenvalues numerically close to 1.
    """
    Q = geometry.complement.vectors
    if Q.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(Q.T @ T @ Q))))


def _check_theta(theta, c):
    if not 0 < theta < math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    if c < 1 and theta > math.pi / 4 + 1e-15:
        raise ValueError("regularized rate formulas assume theta <= pi/4")


def _rho_quadratic(theta, c, lam):
    # largest-modulus root of rho^2 - (lam c cos2t - lam + 2) rho + kappa(lam)
    cos2 = math.cos(2 * theta)
    knee = 1.0 / (math.cos(theta) + math.sin(theta)) ** 2
    if c >= knee:
        kappa = c * math.sin(theta) ** 2 * lam**2 - (1 - c * cos2) * lam + 1
        return math.sqrt(max(kappa, 0.0))
    disc = max(cos2**2 * c**2 - 2 * c + 1, 0.0)
    return 0.5 * (lam * c * cos2 - lam + 2 + lam * math.sqrt(disc))


def rho_closed_form(theta, c=1.0):
    """Asymptotic rate of DR on the l2-regularized problem, ``c = alpha/(alpha+gamma)``.

    ``sqrt(c) cos(theta)`` above the knee ``c* = 1/(cos + sin)^2``, otherwise
    the larger real root of ``rho^2 - (c cos 2theta + 1) rho + c cos^2 theta``.
    """
    _check_theta(theta, c)
    return _rho_quadratic(theta, c, 1.0)


def rho_gdr_closed_form(theta, c, lam):
    """Asymptotic rate of relaxed DR (``lam = 2``: Peaceman-Rachford)."""
    _check_theta(theta, c)
    if not 0 < lam <= 2:
        raise ValueError("lam must lie in (0, 2]")
    return _rho_quadratic(theta, c, lam)


@dataclass(frozen=True)
class OptimalParameters:
    c_star: float
    c_sharp: float
    c_bar: float
    c_tilde: float


def optimal_parameters(theta):
    """Optimal ``c`` for DR, the break-even ``c`` and the relaxation knees.

    ``c_star`` minimizes the regularized DR rate, ``c_sharp`` is where it
    equals ``cos(theta)``, ``c_bar`` is where the optimal relaxation leaves 2
    and below ``c_tilde`` Peaceman-Rachford beats DR.
    """
    _check_theta(theta, 0.5)
    ct, st = math.cos(theta), math.sin(theta)
    return OptimalParameters(
        c_star=1.0 / (ct + st) ** 2,
        c_sharp=1.0 / (1.0 + 2.0 * ct),
        c_bar=1.0 / (2.0 - math.cos(2 * theta)),
        c_tilde=1.0 / (2.0 - ct**2),
    )


def lambda_star(theta, c):
    """Relaxation parameter minimizing ``rho_gdr_closed_form(theta, c, .)``."""
    _check_theta(theta, c)
    cos2 = math.cos(2 * theta)
    if c <= 1.0 / (2.0 - cos2):
        return 2.0
    return (1.0 / c - cos2) / (1.0 - cos2)


def rho_optimal_relaxation(theta, c):
    """Rate at ``lambda_star``: the three-branch formula in ``c``."""
    p = optimal_parameters(theta)
    _check_theta(theta, c)
    cos2 = math.cos(2 * theta)
    if c <= p.c_star:
        return c * cos2 + math.sqrt(max(cos2**2 * c**2 - 2 * c + 1, 0.0))
    if c <= p.c_bar:
        return math.sqrt(2 * c - 1)
    return math.sqrt(2 * c - 1 - c**2 * cos2**2) / (2 * math.sin(theta) * math.sqrt(c))


class RateSource(str, Enum):
    CLOSED_FORM = "CLOSED_FORM"
    SPECTRAL = "SPECTRAL"


@dataclass(frozen=True)
class RatePrediction:
    rho: float
    theta1: float
    c: float
    lam: float
    c_star: float
    c_sharp: float
    c_bar: float
    lambda_star: float
    source: RateSource
    matrix: Optional[np.ndarray] = field(default=None, repr=False)


def predict_rate(theta1, c=1.0, lam=1.0, *, S=None, K=None, regularized_term="g"):
    """Predicted rate with its optimal-parameter context.

    Closed form by default. Passing ``S`` and ``K`` computes the spectral
    rate of the matching iteration matrix instead: ``T(c)`` for DR with the
    l2 term on the soft threshold (``regularized_term='f'``), otherwise
    ``T(c, lam)``.
    """
    if theta1 <= math.pi / 4:
        p = optimal_parameters(theta1)
        lstar = lambda_star(theta1, c)
    else:
        p = OptimalParameters(math.nan, math.nan, math.nan, math.nan)
        lstar = math.nan
    common = dict(theta1=theta1, c=c, lam=lam, c_star=p.c_star, c_sharp=p.c_sharp,
                  c_bar=p.c_bar, lambda_star=lstar)
    if S is None:
        rho = rho_closed_form(theta1, c) if lam == 1 else rho_gdr_closed_form(theta1, c, lam)
        return RatePrediction(rho=rho, source=RateSource.CLOSED_FORM, **common)
    geom = compute_geometry(K, S)
    if regularized_term == "f" and lam == 1:
        T = build_T_c(S, K, c)
    else:
        T = build_T_c_lambda(S, K, c, lam)
    return RatePrediction(rho=spectral_rate(T, geom), source=RateSource.SPECTRAL,
                          matrix=T, **common)


class FixedPointKind(str, Enum):
    INTERIOR = "INTERIOR"
    BOUNDARY = "BOUNDARY"


@dataclass(frozen=True)
class FixedPointInfo:
    y_star: np.ndarray
    eta: np.ndarray
    kind: FixedPointKind
    face_indices: np.ndarray
    theta_bar1: Optional[float] = None


def compute_fixed_point_info(P, S, gamma, y_star, *, alpha=math.inf, regularized_term="f",
                             tau_face=TAU_FACE, tol=1e-8):
    """Validate ``eta = (x* - y*) / gamma`` as a dual certificate and classify ``y*``.

    For the regularized problem, ``regularized_term`` says which resolvent
    carries the l2 term: ``'f'`` (scaled soft threshold) puts ``x*/alpha``
    into the subgradient condition, ``'g'`` into the range condition.

    The fixed point is BOUNDARY when some zero entry has
    ``|eta_j| >= 1 - tau_face`` (equivalently the reflected point sits on
    the boundary of the sign-consistent region); those entries form the face.
    """
    if P.x_star is None:
        raise ValueError("the problem must carry its solution x_star")
    K = _as_constraint(P)
    x_star = P.x_star
    y_star = np.asarray(y_star, dtype=float)
    eta = (x_star - y_star) / gamma
    shift = x_star / alpha if not math.isinf(alpha) else np.zeros_like(x_star)
    scale = max(1.0, float(np.max(np.abs(eta))))

    if regularized_term == "g" and not math.isinf(alpha):
        c = alpha / (alpha + gamma)
        x_back = c * y_star + K.correction(y_star, scale=c)
        in_range = eta + shift
        subgrad = eta
    else:
        x_back = y_star + K.correction(y_star)
        in_range = eta
        subgrad = eta - shift
    if np.max(np.abs(x_back - x_star)) > tol * max(1.0, float(np.max(np.abs(x_star)))):
        raise NotAFixedPointError("not a fixed point: resolvent of y* does not return x*")
    if np.max(np.abs(in_range - K.pinv_A @ (K.A @ in_range))) > tol * scale:
        raise NotAFixedPointError("not a fixed point: certificate not in R(A^T)")
    sup, zer = S.support, S.zero_indices
    if sup.size and np.max(np.abs(subgrad[sup] - S.sign_pattern[sup])) > tol * scale:
        raise NotAFixedPointError("not a fixed point: certificate sign mismatch on support")
    if zer.size and np.max(np.abs(subgrad[zer])) > 1 + tol * scale:
        raise NotAFixedPointError("not a fixed point: certificate exceeds 1 off support")

    face = zer[np.abs(subgrad[zer]) >= 1 - tau_face] if zer.size else np.zeros(0, int)
    if face.size == 0:
        return FixedPointInfo(y_star, eta, FixedPointKind.INTERIOR, face)
    try:
        theta_bar = boundary_rate(S, K, face)
    except NongenericFaceError:
        theta_bar = None
    return FixedPointInfo(y_star, eta, FixedPointKind.BOUNDARY, face, theta_bar)


def boundary_rate(S, K, face_indices):
    """Leading angle between ``N(A)`` and ``N(B_bar)``, ``B_bar`` = ``B`` without the face rows.

    Only single-level removal is analyzed: all face rows are dropped at once.
    Raises :class:`NongenericFaceError` if the nullspaces then intersect.
    """
    K = _as_constraint(K)
    face = np.asarray(face_indices, dtype=int)
    geom = compute_geometry(K, S)
    if face.size == 0:
        return geom.theta1
    if not np.all(np.isin(face, S.zero_indices)):
        raise ValueError("face indices must be zero entries of the solution")
    bar = compute_geometry(K, S.without(face))
    if bar.nullspaces_intersect or bar.theta.cosines[0] >= 1.0 - 1e-12:
        raise NongenericFaceError("nongeneric face: N(A) and N(B_bar) intersect")
    theta_bar = bar.theta1
    if theta_bar > geom.theta1 + 1e-10:
        raise NongenericFaceError("nongeneric face: removing rows increased the angle")
    return theta_bar


def classify_face_behaviour(z_tail, face_indices, gamma):
    """Which side of the face each coordinate's threshold input stays on.

    ``z_tail`` is a sequence of soft-threshold inputs (``2x - y``) from the
    linear regime. Returns a dict mapping each face index to ``'I'`` (stays
    inside ``[-gamma, gamma]``), ``'II'`` (stays strictly outside) or
    ``'III'`` (alternates).
    """
    Z = np.abs(np.asarray(z_tail, dtype=float))
    out = {}
    for j in np.asarray(face_indices, dtype=int):
        outside = Z[:, j] > gamma
        out[int(j)] = "II" if outside.all() else "I" if not outside.any() else "III"
    return out


@dataclass(frozen=True)
class RipBound:
    delta: float
    d: float
    bound: float


def rip_bound(A, s, max_supports=MAX_SUPPORTS):
    """Restricted isometry constant by enumeration and the implied angle bound.

    ``delta_s`` is the largest deviation of an eigenvalue of ``A_S^T A_S``
    from 1 over all supports of size ``s``; the bound on ``cos(theta_1)`` is
    ``sqrt(1 - d (1 - delta_s))`` clamped to ``[0, 1]``, ``d = 1/lambda_max(AA^T)``.
    Columns of ``A`` must have unit norm.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-10:
        raise ValueError("columns of A must be normalized to unit l2 norm")
    if not 1 <= s <= n:
        raise ValueError("sparsity must lie in [1, n]")
    if math.comb(n, s) > max_supports:
        raise EnumerationTooLargeError(f"enumeration too large: C({n},{s}) supports")
    G = A.T @ A
    delta = 0.0
    batch = []
    for idx in itertools.combinations(range(n), s):
        batch.append(G[np.ix_(idx, idx)])
        if len(batch) == 4096:
            delta = max(delta, _batch_delta(batch))
            batch = []
    if batch:
        delta = max(delta, _batch_delta(batch))
    d = smallest_eig_inverse_gram(A)
    bound = math.sqrt(min(max(1.0 - d * (1.0 - delta), 0.0), 1.0))
    return RipBound(delta, d, bound)


def _batch_delta(batch):
    w = np.linalg.eigvalsh(np.stack(batch))
    return float(max(np.max(w[:, -1] - 1.0), np.max(1.0 - w[:, 0]), 0.0))


def check_rip_bound(A, support):
    """Return ``(cos_theta1, RipBound)`` for the selector of ``support``.

    Raises AssertionError if ``cos(theta_1)`` exceeds the bound whenever the
    bound is informative (``d (1 - delta) <= 1``).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    S = SupportInfo.from_indices(A.shape[1], support)
    rb = rip_bound(A, len(S.support))
    cos1 = float(compute_geometry(A, S).theta.cosines[0])
    if rb.d * (1 - rb.delta) <= 1:
        assert cos1 <= rb.bound + 1e-10, f"cos(theta_1) = {cos1} exceeds RIP bound {rb.bound}"
    return cos1, rb


def synthetic_geometry(angles, n_extra=0, n_intersection=0, rng=None, permute=True):
    """Constraint matrix and support whose nullspaces meet at prescribed angles.

    Each angle ``theta_i`` gets a coordinate pair ``(u, v)``: ``N(B)``
    contains ``e_u`` and ``N(A)`` contains ``cos(theta_i) e_u + sin(theta_i) e_v``.
    ``n_extra`` further coordinates lie in ``N(A)`` only, and
    ``n_intersection`` coordinates span ``R(A^T) ∩ R(B^T)``. ``A`` is an
    orthonormal basis of ``N(A)^⊥`` mixed by a random invertible matrix, so
    it is not orthonormal itself, and ``B`` stays a coordinate selector.

    Returns
    -------
    A : ndarray of shape (m, n)
    S : SupportInfo
        Support ``N(B)^⊥``-complement, i.e. the coordinates spanning ``N(B)``.
    """
    rng = np.random.default_rng(rng)
    angles = np.sort(np.asarray(angles, dtype=float))
    if angles.size == 0 or angles[0] <= 0 or angles[-1] >= math.pi / 2:
        raise ValueError("angles must lie in (0, pi/2)")
    p = angles.size
    n = 2 * p + n_extra + n_intersection
    null_A = np.zeros((n, p + n_extra))
    for i, t in enumerate(angles):
        null_A[2 * i, i] = math.cos(t)
        null_A[2 * i + 1, i] = math.sin(t)
    for j in range(n_extra):
        null_A[2 * p + j, p + j] = 1.0
    support = 2 * np.arange(p)
    comp = orthogonal_complement(SubspaceBasis(null_A)).vectors
    m = comp.shape[1]
    while True:
        mix = rng.standard_normal((m, m))
        if np.linalg.cond(mix) < 1e3:
            break
    A = mix @ comp.T
    if permute:
        perm = rng.permutation(n)
        A = A[:, perm]
        support = np.argsort(perm)[support]
    return A, SupportInfo.from_indices(n, support)
