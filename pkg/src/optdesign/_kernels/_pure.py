"""NumPy implementations of the hot scan kernels.

These are the reference implementations; a Cython twin with identical
signatures lives in ``_cyk.pyx`` and is preferred at import time when the
compiled extension is available.
"""

import numpy as np


def quad_forms(X, H, out=None):
    """Quadratic form x_i' H x_i for every column x_i of ``X``.

    Parameters
    ----------
    X : (n, k) ndarray
        Points stored one per column.
    H : (n, n) ndarray, symmetric
    out : (k,) ndarray, optional
        Preallocated output buffer.

    Returns
    -------
    (k,) ndarray
    """
    r = np.einsum("ij,ij->j", X, H @ X)
    if out is None:
        return r
    out[:] = r
    return out


def fused_scan(X, h, kappa, a, b):
    """In-place update kappa_i <- a*kappa_i + b*(x_i'h)^2; returns argmax.

    The projection vector ``h`` is H @ x_step for the point entering or
    leaving the design, so this applies a rank-one change of the inverse
    information matrix to every cached quadratic form in one pass.
    """
    w = X.T @ h
    np.multiply(kappa, a, out=kappa)
    kappa += b * np.square(w)
    return int(np.argmax(kappa))
