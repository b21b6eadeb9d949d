"""Matrix-free estimation of the leading principal angle.

When ``N(A) ∩ N(B) = {0}``, alternating projections and Douglas-Rachford
applied to ``find x in N(A) ∩ N(B)`` both drive the iterate to zero at a rate
set by ``cos(theta_1)``: per step ``cos^2`` for alternating projections and
``cos`` for DR. Fitting a line to ``log ||x^k||`` recovers the angle using
only projector applications.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import InsufficientRegimeError, SubspaceIntersectionError
from .linalg import nullspace_basis

EPS = np.finfo(float).eps


class AngleMethod(str, Enum):
    ALT_PROJ = "ALT_PROJ"
    DR_FEAS = "DR_FEAS"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"altproj": cls.ALT_PROJ, "alt_proj": cls.ALT_PROJ, "pocs": cls.ALT_PROJ,
                   "dr": cls.DR_FEAS, "dr_feas": cls.DR_FEAS}
        if key not in aliases:
            raise ValueError(f"unknown angle-estimation method {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class AngleEstimate:
    """Estimated ``cos(theta_1)`` with fit diagnostics.

    Attributes
    ----------
    cos_theta1 : float
        ``exp(slope / 2)`` for ALT_PROJ, ``exp(slope)`` for DR_FEAS.
    method : AngleMethod
    fit_window : int
        Number of iterates used in the line fit.
    residual : float
        RMS deviation of ``log ||x^k||`` from the fitted line.
    norms : ndarray
        The tracked norms, ``k = 0`` first: ``||x^k||`` for ALT_PROJ and
        ``||y^{k+1} - y^k||`` for DR_FEAS.
    """

    cos_theta1: float
    method: AngleMethod
    fit_window: int
    residual: float
    norms: np.ndarray = field(repr=False)

    @property
    def theta1(self):
        return float(np.arccos(np.clip(self.cos_theta1, 0.0, 1.0)))


def nullspace_projector(M, tol=None):
    """Callable ``x -> P_{N(M)} x`` for a dense matrix ``M``."""
    Q = nullspace_basis(np.atleast_2d(np.asarray(M, dtype=float)), tol=tol).vectors

    def project(x):
        return Q @ (Q.T @ x)

    return project


def estimate_angle(projN_A, projN_B, x0, iters=2000, method="altproj", window_fraction=0.25):
    """Estimate ``cos(theta_1)`` between ``N(A)`` and ``N(B)``.

    Parameters
    ----------
    projN_A, projN_B : callable
        Orthogonal projectors onto the two nullspaces.
    x0 : ndarray
        Starting point; for ALT_PROJ it is first projected onto ``N(A)`` so
        that ``||x^k|| <= cos(theta_1)^(2k) ||x^0||`` holds from ``k = 0``.
    iters : int
    method : {'altproj', 'dr'} or AngleMethod
    window_fraction : float
        Trailing share of the usable iterates (those above
        ``1e2 * eps * ||x^0||``) used for the fit, at least 3 points.

    Raises
    ------
    InsufficientRegimeError
        Fewer than 3 usable iterates and the iteration did not annihilate.
    SubspaceIntersectionError
        Nonnegative fitted slope.
    """
    method = AngleMethod.parse(method)
    x = np.asarray(x0, dtype=float).copy()
    if method is AngleMethod.ALT_PROJ:
        x = projN_A(x)
        step = lambda v: projN_A(projN_B(v))
    else:
        # track the DR step y^{k+1} - y^k: the map is normal, so its norm decays
        # without the rotation-induced ripple that ||P_{N(B)} y^k|| shows
        y = x

        def dr(v):
            rb = 2 * projN_B(v) - v
            return 0.5 * (2 * projN_A(rb) - rb + v)

        x = dr(y) - y
        step = dr
    norms = [np.linalg.norm(x)]
    if norms[0] == 0:
        raise ValueError("starting point has no component to track")
    floor = 1e2 * EPS * norms[0]
    for _ in range(iters):
        x = step(x)
        nrm = np.linalg.norm(x)
        norms.append(nrm)
        if nrm <= floor:
            break
    norms = np.asarray(norms)
    usable = norms > floor
    n_use = int(np.argmin(usable)) if not usable.all() else norms.size
    if n_use < 3:
        if norms[-1] == 0 or n_use < norms.size:
            # annihilated (or nearly) within a step or two
            return AngleEstimate(0.0, method, n_use, 0.0, norms)
        raise InsufficientRegimeError("insufficient linear regime")
    window = max(3, int(round(window_fraction * n_use)))
    k = np.arange(n_use - window, n_use)
    logs = np.log(norms[k])
    slope, intercept = np.polyfit(k, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * k + intercept)) ** 2)))
    if slope >= 0:
        raise SubspaceIntersectionError("subspaces intersect nontrivially")
    cos1 = float(np.exp(slope / 2 if method is AngleMethod.ALT_PROJ else slope))
    return AngleEstimate(cos1, method, window, residual, norms)


def estimate_angle_dense(A, S, x0=None, iters=2000, method="altproj", rng=None):
    """Convenience wrapper building both projectors from dense ``A`` and a support."""
    PA = nullspace_projector(A)
    PB = nullspace_projector(S.B) if S.r else (lambda v: v)
    if x0 is None:
        x0 = np.random.default_rng(rng).standard_normal(S.n)
    return estimate_angle(PA, PB, x0, iters=iters, method=method)
