# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: banded LDL^T factorisation/solve and CSR mat-vec.

Band layout: band[k, d] = A[k + d, k] for 0 <= d <= b (lower band, one row
per column of A).  After factorisation band[k, 0] holds D[k] and
band[k, d] the unit-lower factor entry L[k + d, k].
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()


def band_ldlt(double[:, ::1] band, double pivot_tol=0.0):
    """Factor in place.  Returns the number of negative pivots."""
    cdef Py_ssize_t n = band.shape[0]
    cdef Py_ssize_t b = band.shape[1] - 1
    cdef Py_ssize_t k, i, j, m
    cdef double dk, f
    cdef double[::1] tmp = np.empty(b + 1, dtype=np.float64)
    cdef Py_ssize_t negative = 0
    for k in range(n):
        dk = band[k, 0]
        if not isfinite(dk) or dk == 0.0 or (dk < 0.0 and -dk <= pivot_tol) or (dk > 0.0 and dk <= pivot_tol):
            raise ZeroDivisionError(f"pivot {k} is {dk!r}; matrix singular or needs pivoting")
        if dk < 0.0:
            negative += 1
        m = b if b < n - 1 - k else n - 1 - k
        for i in range(1, m + 1):
            tmp[i] = band[k, i]
        for j in range(1, m + 1):
            f = tmp[j] / dk
            if f != 0.0:
                for i in range(j, m + 1):
                    band[k + j, i - j] -= tmp[i] * f
        for i in range(1, m + 1):
            band[k, i] = tmp[i] / dk
    return negative


def band_ldlt_solve(double[:, ::1] factor, double[:, ::1] rhs):
    """Solve in place for every column of ``rhs`` (shape (n, p))."""
    cdef Py_ssize_t n = factor.shape[0]
    cdef Py_ssize_t b = factor.shape[1] - 1
    cdef Py_ssize_t p = rhs.shape[1]
    cdef Py_ssize_t k, d, c, m
    cdef double l, dk
    for k in range(n):
        m = b if b < n - 1 - k else n - 1 - k
        for d in range(1, m + 1):
            l = factor[k, d]
            if l != 0.0:
                for c in range(p):
                    rhs[k + d, c] -= l * rhs[k, c]
    for k in range(n):
        dk = factor[k, 0]
        for c in range(p):
            rhs[k, c] /= dk
    for k in range(n - 1, -1, -1):
        m = b if b < n - 1 - k else n - 1 - k
        for d in range(1, m + 1):
            l = factor[k, d]
            if l != 0.0:
                for c in range(p):
                    rhs[k, c] -= l * rhs[k + d, c]


def csr_matvec(const long[::1] indptr, const long[::1] indices,
               const double[::1] data, const double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, q
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    for i in range(n):
        acc = 0.0
        for q in range(indptr[i], indptr[i + 1]):
            acc += data[q] * x[indices[q]]
        y[i] = acc
    return out
