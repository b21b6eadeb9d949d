"""Exception types raised by bpsplit."""

import numpy as np


class BPSplitError(Exception):
    """Base class for errors raised by this package."""


class SingularGramError(BPSplitError, np.linalg.LinAlgError):
    """The gram matrix ``A A^T`` is singular (``A`` lacks full row rank)."""


class InsufficientRegimeError(BPSplitError, ValueError):
    """Too few points in a linear regime to fit a rate."""


class NotAFixedPointError(BPSplitError, ValueError):
    """A supplied reference point fails the dual certificate checks."""


class NongenericFaceError(BPSplitError, ValueError):
    """Removing face rows leaves ``N(A)`` and ``N(B_bar)`` intersecting."""


class EnumerationTooLargeError(BPSplitError, ValueError):
    """Brute-force enumeration over supports would be too large."""


class UniquenessError(BPSplitError, RuntimeError):
    """No instance with a certified unique minimizer could be produced."""


class SubspaceIntersectionError(BPSplitError, ValueError):
    """Iterates do not decay: the two subspaces intersect nontrivially."""
