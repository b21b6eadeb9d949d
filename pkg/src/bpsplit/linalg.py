"""Dense linear algebra kernel.

Pseudoinverses, orthonormal bases for nullspaces and row spaces, principal
angles between subspaces and a few spectral helpers. Every routine is a pure
function of its inputs.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SingularGramError

ORTH_TOL = 1e-10


def _rank_cutoff(s, shape, tol):
    if s.size == 0 or s[0] == 0.0:
        return np.inf
    if tol is None:
        tol = max(shape) * np.finfo(float).eps
    return tol * s[0]


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of ``R^n``.

    Parameters
    ----------
    vectors : ndarray of shape (n, k)
        Columns form an orthonormal basis. ``k`` may be zero.
    """

    vectors: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        if not np.all(np.isfinite(V)):
            raise ValueError("basis has non-finite entries")
        if V.shape[1]:
            err = np.max(np.abs(V.T @ V - np.eye(V.shape[1])))
            if err > ORTH_TOL:
                raise ValueError(f"columns not orthonormal (max deviation {err:.2e})")
        object.__setattr__(self, "vectors", V)

    @property
    def ambient_dim(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def projector(self):
        """Orthogonal projector ``V V^T`` onto the subspace."""
        return self.vectors @ self.vectors.T

    def project(self, x):
        return self.vectors @ (self.vectors.T @ x)


@dataclass(frozen=True)
class PrincipalAngles:
    """Principal angles in ascending order with their cosines."""

    angles: np.ndarray
    cosines: np.ndarray

    def __len__(self):
        return len(self.angles)

    @property
    def first(self):
        """The leading (smallest) angle."""
        return float(self.angles[0])


def pseudoinverse(M, tol=None):
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero; the
    default ``tol`` is ``max(M.shape) * eps``. The zero matrix maps to the
    zero matrix of transposed shape.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-d array")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = _rank_cutoff(s, M.shape, tol)
    keep = s > cutoff
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def _svd_split(M, tol):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[None, :]
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    n = M.shape[1]
    if M.shape[0] == 0:
        return 0, np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > _rank_cutoff(s, M.shape, tol)))
    return rank, Vt.T


def matrix_rank(M, tol=None):
    """Numerical rank with the same cutoff convention as :func:`pseudoinverse`."""
    return _svd_split(M, tol)[0]


def nullspace_basis(M, tol=None):
    """Orthonormal basis of ``N(M) = {x : M x = 0}``."""
    rank, V = _svd_split(M, tol)
    return SubspaceBasis(V[:, rank:])


def range_basis(M, tol=None):
    """Orthonormal basis of the row space ``R(M^T)``."""
    rank, V = _svd_split(M, tol)
    return SubspaceBasis(V[:, :rank])


def orthonormal_span(*blocks, tol=1e-10):
    """Orthonormal basis for the span of the columns of all ``blocks``."""
    cols = [np.asarray(b.vectors if isinstance(b, SubspaceBasis) else b, dtype=float)
            for b in blocks]
    cols = [c if c.ndim == 2 else c[:, None] for c in cols]
    X = np.hstack(cols)
    if X.shape[1] == 0:
        return SubspaceBasis(np.zeros((X.shape[0], 0)))
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return SubspaceBasis(U[:, :rank])


def orthogonal_complement(basis, tol=1e-10):
    """Orthonormal basis of the orthogonal complement of ``basis``."""
    V = basis.vectors if isinstance(basis, SubspaceBasis) else np.asarray(basis, float)
    return nullspace_basis(V.T, tol=tol)


def principal_angles(U, V):
    """Principal angles between two subspaces.

    Computed from the singular values of ``U^T V`` (Bjorck-Golub); cosines are
    clamped to ``[0, 1]`` before ``arccos``. The number of angles is
    ``min(dim U, dim V)``; an empty basis gives an empty result.
    """
    U = U if isinstance(U, SubspaceBasis) else SubspaceBasis(U)
    V = V if isinstance(V, SubspaceBasis) else SubspaceBasis(V)
    if U.ambient_dim != V.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    if U.dim > V.dim:
        U, V = V, U
    if U.dim == 0:
        return PrincipalAngles(np.zeros(0), np.zeros(0))
    sigma = np.linalg.svd(U.vectors.T @ V.vectors, compute_uv=False)
    cosines = np.clip(sigma[: U.dim], 0.0, 1.0)
    # svd returns descending singular values, i.e. ascending angles
    return PrincipalAngles(np.arccos(cosines), cosines)


def smallest_eig_inverse_gram(A):
    """Return ``d = 1 / lambda_max(A A^T)``, the smallest eigenvalue of ``(A A^T)^{-1}``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    w = np.linalg.eigvalsh(A @ A.T)
    if w[-1] <= 0 or w[0] <= max(A.shape) * np.finfo(float).eps * w[-1]:
        raise SingularGramError("gram matrix singular")
    return 1.0 / w[-1]


def eigenvalues(M, vectors=False):
    """All eigenvalues of a square matrix (general dense solver).

    With ``vectors=True`` returns ``(values, vectors)`` as ``numpy.linalg.eig``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("eigenvalues requires a square matrix")
    if vectors:
        return np.linalg.eig(M)
    return np.linalg.eigvals(M)


def spectral_radius(M):
    """Largest eigenvalue modulus; zero for an empty matrix."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(eigenvalues(M))))
