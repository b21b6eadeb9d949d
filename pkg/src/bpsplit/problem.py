"""Basis pursuit problem data: the instance and the support of its solution."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import matrix_rank


@dataclass(frozen=True)
class ProblemInstance:
    """``min ||x||_1  s.t.  A x = b`` with an optional known minimizer.

    Parameters
    ----------
    A : ndarray of shape (m, n)
        Measurement matrix with full row rank and ``m <= n``.
    b : ndarray of shape (m,)
    x_star : ndarray of shape (n,), optional
        Known solution; must satisfy ``A x_star = b`` to 1e-10 (relative).
    """

    A: np.ndarray
    b: np.ndarray
    x_star: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        m, n = A.shape
        if m > n:
            raise ValueError(f"need m <= n, got A of shape {A.shape}")
        if b.shape != (m,):
            raise ValueError(f"b has length {b.size}, expected {m}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite entries in A or b")
        if matrix_rank(A) != m:
            raise ValueError("A must have full row rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.x_star is not None:
            x = np.asarray(self.x_star, dtype=float).ravel()
            if x.shape != (n,):
                raise ValueError(f"x_star has length {x.size}, expected {n}")
            resid = np.linalg.norm(A @ x - b)
            if resid > 1e-10 * max(1.0, np.linalg.norm(b)):
                raise ValueError(f"x_star is infeasible (residual {resid:.2e})")
            object.__setattr__(self, "x_star", x)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class SupportInfo:
    """Support of a solution and the selector ``B`` of its zero components."""

    support: np.ndarray
    zero_indices: np.ndarray
    sign_pattern: np.ndarray
    n: int
    B: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.B is None:
            B = np.zeros((len(self.zero_indices), self.n))
            B[np.arange(len(self.zero_indices)), self.zero_indices] = 1.0
            object.__setattr__(self, "B", B)

    @classmethod
    def from_solution(cls, x, tol=0.0):
        """Build from a solution vector; entries with ``|x_i| <= tol`` count as zero."""
        x = np.asarray(x, dtype=float).ravel()
        nz = np.abs(x) > tol
        signs = np.where(nz, np.sign(x), 0.0)
        return cls(support=np.flatnonzero(nz), zero_indices=np.flatnonzero(~nz),
                   sign_pattern=signs, n=x.size)

    @classmethod
    def from_indices(cls, n, support, signs=None):
        support = np.unique(np.asarray(support, dtype=int))
        if support.size and (support[0] < 0 or support[-1] >= n):
            raise ValueError("support index out of range")
        pattern = np.zeros(n)
        pattern[support] = 1.0 if signs is None else np.asarray(signs, float)
        return cls(support=support, zero_indices=np.setdiff1d(np.arange(n), support),
                   sign_pattern=pattern, n=n)

    @property
    def r(self):
        return len(self.zero_indices)

    def without(self, indices):
        """Same support bookkeeping with rows ``indices`` dropped from ``B``."""
        keep = np.setdiff1d(self.zero_indices, np.asarray(indices, dtype=int))
        B = np.zeros((len(keep), self.n))
        B[np.arange(len(keep)), keep] = 1.0
        return SupportInfo(support=self.support, zero_indices=keep,
                           sign_pattern=self.sign_pattern, n=self.n, B=B)
