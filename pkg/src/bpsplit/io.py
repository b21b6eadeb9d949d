"""Matrix and vector file I/O.

MatrixMarket array files (dense, real, general) are the primary format.
Comma-separated text is accepted for small hand-written fixtures.
"""

from pathlib import Path

import numpy as np
import scipy.io


def load_matrix(path):
    """Load a dense real matrix from ``.mtx`` or ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".mtx":
        M = scipy.io.mmread(str(path))
        if hasattr(M, "toarray"):
            M = M.toarray()
        M = np.asarray(M)
        if np.iscomplexobj(M):
            raise ValueError(f"{path}: complex matrices are not supported")
        return np.atleast_2d(M.astype(float))
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    return M.astype(float)


def save_matrix(path, M, comment=""):
    """Write ``M`` as a dense MatrixMarket array (or CSV for ``.csv`` paths)."""
    path = Path(path)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if path.suffix.lower() == ".csv":
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
        return
    scipy.io.mmwrite(str(path), M, comment=comment, field="real",
                     precision=17, symmetry="general")


def load_vector(path):
    """Load a real vector from ``.mtx``, ``.csv`` or whitespace-separated text."""
    path = Path(path)
    if path.suffix.lower() == ".mtx":
        return load_matrix(path).ravel()
    text = path.read_text().replace(",", " ")
    return np.array([float(t) for t in text.split()], dtype=float)


def save_vector(path, v):
    path = Path(path)
    v = np.asarray(v, dtype=float).ravel()
    if path.suffix.lower() == ".mtx":
        save_matrix(path, v[:, None])
    else:
        path.write_text("".join(f"{x:.17g}\n" for x in v))
