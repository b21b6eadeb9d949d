"""scikit-learn style wrappers around the solvers and the rate theory."""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import NongenericFaceError
from .operators import AffineConstraint, ProxParams
from .problem import ProblemInstance, SupportInfo
from .rate_theory import (compute_geometry, optimal_parameters, predict_rate,
                          rho_gdr_closed_form)
from .solvers import SolverConfig, Variant, solve


def _check_system(A, b):
    A = check_array(A, dtype=float, ensure_min_samples=1, ensure_min_features=1)
    b = check_array(np.asarray(b, dtype=float).reshape(-1, 1), dtype=float).ravel()
    if b.size != A.shape[0]:
        raise ValueError(f"b has length {b.size}, expected {A.shape[0]}")
    return A, b


class BasisPursuit(BaseEstimator):
    """Basis pursuit ``min ||x||_1 s.t. A x = b`` by operator splitting.

    Parameters
    ----------
    variant : str, default 'DR'
        Any :class:`~bpsplit.solvers.Variant` name.
    gamma : float, default 1.0
        Threshold of the l1 resolvent.
    alpha : float or None, default None
        Weight of the ``||x||^2 / (2 alpha)`` term; ``None`` means no term.
    lam : float or None, default None
        Relaxation parameter, required by GDR and GDR_REG only.
    max_iter : int, default 100000
    tol : float, default 1e-12
        Stop once ``||y^{k+1} - y^k||_inf <= tol``.

    Attributes
    ----------
    coef_ : ndarray of shape (n,)
        The recovered solution.
    y_ : ndarray of shape (n,)
        Final iterate of the underlying fixed-point iteration.
    dual_coef_ : ndarray or None
        Dual estimate from the primal-dual variants.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, variant="DR", gamma=1.0, alpha=None, lam=None, max_iter=100_000,
                 tol=1e-12):
        self.variant = variant
        self.gamma = gamma
        self.alpha = alpha
        self.lam = lam
        self.max_iter = max_iter
        self.tol = tol

    def _config(self):
        alpha = math.inf if self.alpha is None else float(self.alpha)
        return SolverConfig(Variant(self.variant), ProxParams(float(self.gamma), alpha),
                            lam=self.lam, max_iters=int(self.max_iter), stop_tol=float(self.tol),
                            record_every=max(1, int(self.max_iter)), store_vectors=False)

    def fit(self, A, b, y0=None):
        A, b = _check_system(A, b)
        cfg = self._config()
        res = solve(ProblemInstance(A, b), cfg, y0)
        self.coef_ = res.x_final
        self.y_ = res.y_final
        self.dual_coef_ = res.dual_estimate
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, A):
        check_is_fitted(self, "coef_")
        A = check_array(A, dtype=float)
        if A.shape[1] != self.n_features_in_:
            raise ValueError(f"A has {A.shape[1]} columns, expected {self.n_features_in_}")
        return A @ self.coef_


class RateAnalyzer(BaseEstimator):
    """Principal-angle geometry of a basis pursuit solution and its rates.

    ``fit(A, x)`` reads the support of ``x`` (entries above ``support_tol``
    in magnitude) and computes the leading angle between ``N(A)`` and the
    nullspace of the zero-selector. ``predict`` maps ``(c, lambda)`` pairs
    to closed-form asymptotic rates.

    Attributes
    ----------
    theta1_ : float
    cos_theta1_ : float
    support_ : ndarray
    optimal_ : OptimalParameters or None
        ``None`` when ``theta1_ > pi/4``, where the regularized formulas do
        not apply.
    rate_ : float
        Rate at the constructor's ``c`` and ``lam``.
    """

    def __init__(self, c=1.0, lam=1.0, support_tol=0.0):
        self.c = c
        self.lam = lam
        self.support_tol = support_tol

    def fit(self, A, x):
        A = check_array(A, dtype=float)
        x = check_array(np.asarray(x, dtype=float).reshape(1, -1), dtype=float).ravel()
        if x.size != A.shape[1]:
            raise ValueError(f"x has length {x.size}, expected {A.shape[1]}")
        S = SupportInfo.from_solution(x, tol=self.support_tol)
        K = AffineConstraint(A, A @ x)
        geom = compute_geometry(K, S)
        if geom.nullspaces_intersect:
            raise NongenericFaceError("nullspaces intersect; the solution is not unique")
        self.geometry_ = geom
        self.support_ = S.support
        self.theta1_ = geom.theta1
        self.cos_theta1_ = float(math.cos(geom.theta1))
        self.optimal_ = optimal_parameters(geom.theta1) if geom.theta1 <= math.pi / 4 else None
        self.rate_ = predict_rate(geom.theta1, self.c, self.lam).rho
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, X):
        """Rates for rows ``(c, lam)`` of ``X`` (a single column means ``lam = 1``)."""
        check_is_fitted(self, "theta1_")
        X = check_array(X, dtype=float)
        if X.shape[1] == 1:
            X = np.hstack([X, np.ones_like(X)])
        if X.shape[1] != 2:
            raise ValueError("X must have columns (c,) or (c, lam)")
        return np.array([rho_gdr_closed_form(self.theta1_, c, lam) for c, lam in X])
