"""Resolvents and reflections used by the splitting iterations.

``ProxParams`` carries the threshold ``gamma`` and the l2 weight ``alpha``;
``alpha = inf`` is the unregularized problem, for which ``c = 1`` exactly and
every regularized resolvent collapses to its plain counterpart.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import pseudoinverse, matrix_rank


def soft_threshold(x, gamma):
    """Componentwise shrinkage ``sgn(x) * max(|x| - gamma, 0)``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def project_box(x, radius=1.0):
    """Projection onto ``[-radius, radius]^n``; the resolvent of ``(||.||_1)^*``."""
    return np.clip(x, -radius, radius)


@dataclass(frozen=True)
class ProxParams:
    gamma: float
    alpha: float = math.inf

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive (or inf)")

    @property
    def regularized(self):
        return not math.isinf(self.alpha)

    @property
    def c(self):
        """``alpha / (alpha + gamma)``, exactly 1 when unregularized."""
        if not self.regularized:
            return 1.0
        return self.alpha / (self.alpha + self.gamma)


@dataclass(frozen=True)
class AffineConstraint:
    """The affine set ``{x : A x = b}`` with a cached pseudoinverse."""

    A: np.ndarray
    b: np.ndarray
    pinv_A: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if b.shape != (A.shape[0],):
            raise ValueError("b length does not match rows of A")
        if matrix_rank(A) != A.shape[0]:
            raise ValueError("A must have full row rank")
        pinv = pseudoinverse(A)
        if np.max(np.abs(A @ pinv - np.eye(A.shape[0]))) > 1e-10:
            raise ValueError("A is too ill-conditioned for a reliable pseudoinverse")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "pinv_A", pinv)

    @classmethod
    def from_problem(cls, problem):
        return cls(problem.A, problem.b)

    def correction(self, x, scale=1.0):
        """``A^+ (b - scale * A x)``."""
        return self.pinv_A @ (self.b - scale * (self.A @ x))

    def residual(self, x):
        return self.A @ x - self.b


def project_affine(x, K):
    """``P(x) = x + A^+ (b - A x)``."""
    return x + K.correction(x)


def reflect_affine(x, K):
    """``R(x) = 2 P(x) - x = x + 2 A^+ (b - A x)``."""
    return x + 2.0 * K.correction(x)


def prox_l1_l2(x, p):
    """Resolvent of ``||x||_1 + ||x||^2 / (2 alpha)``: ``c * S_gamma(x)``."""
    out = soft_threshold(x, p.gamma)
    if p.regularized:
        out *= p.c
    return out


def prox_affine_l2(x, p, K):
    """Resolvent of the affine indicator plus ``||x||^2 / (2 alpha)``.

    Returns ``c x + A^+ (b - c A x)``; the output is always feasible.
    """
    if not p.regularized:
        return project_affine(x, K)
    c = p.c
    return c * x + K.correction(x, scale=c)


def douglas_rachford_map(y, p, K):
    """One Douglas-Rachford step ``T_gamma(y) = prox_f(2 P(y) - y) + y - P(y)``.

    ``prox_f`` is :func:`prox_l1_l2`, so a finite ``alpha`` gives the
    regularized map with the l2 term on the threshold.
    """
    x = project_affine(y, K)
    return prox_l1_l2(2 * x - y, p) + y - x
