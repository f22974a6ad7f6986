# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scan kernels.

Points are stored column-major (Fortran order), one contiguous column per
point, so both kernels stream through memory linearly.  Loops stay serial:
scan results must not depend on reduction order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def quad_forms(double[::1, :] X, double[:, :] H, double[::1] out=None):
    """Quadratic form x_i' H x_i for every column x_i of X."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef cnp.ndarray[double, ndim=1] res
    if out is None:
        res = np.empty(m, dtype=np.float64)
    else:
        res = np.asarray(out.base if out.base is not None else out)
    cdef double[::1] o = res
    cdef Py_ssize_t i, a, b
    cdef double acc, row, xa
    for i in range(m):
        acc = 0.0
        for a in range(n):
            xa = X[a, i]
            row = 0.5 * H[a, a] * xa
            for b in range(a + 1, n):
                row += H[a, b] * X[b, i]
            acc += 2.0 * xa * row
        o[i] = acc
    return res


def fused_scan(double[::1, :] X, double[::1] h, double[::1] kappa,
               double a, double b):
    """kappa_i <- a*kappa_i + b*(x_i'h)^2 in place; returns argmax index."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t m = X.shape[1]
    cdef Py_ssize_t i, r, best = 0
    cdef double w, v, kbest = -1.0 / 0.0
    for i in range(m):
        w = 0.0
        for r in range(n):
            w += X[r, i] * h[r]
        v = a * kappa[i] + b * w * w
        kappa[i] = v
        if v > kbest:
            kbest = v
            best = i
    return best
