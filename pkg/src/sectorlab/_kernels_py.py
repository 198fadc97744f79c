"""Pure numpy versions of the compiled kernels (same signatures, same layout)."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided


def band_ldlt(band: np.ndarray, pivot_tol: float = 0.0) -> int:
    """Factor in place.  Returns the number of negative pivots."""
    n, width = band.shape
    b = width - 1
    # symmetric row storage: A[r, c] at full[r, c - r + b]; flat offset 2b*r + c + b
    full = np.zeros((n + 1, 2 * b + 1))
    rows = np.arange(n)
    for d in range(b + 1):
        keep = rows[: n - d]
        full[keep + d, b - d] = band[keep, d]
        full[keep, b + d] = band[keep, d]
    flat = full.reshape(-1)
    step = flat.strides[0]
    negative = 0
    for k in range(n):
        dk = flat[2 * b * k + k + b]
        if not np.isfinite(dk) or dk == 0.0 or abs(dk) <= pivot_tol:
            raise ZeroDivisionError(f"pivot {k} is {dk!r}; matrix singular or needs pivoting")
        if dk < 0.0:
            negative += 1
        m = min(b, n - 1 - k)
        band[k, 0] = dk
        if m == 0:
            continue
        start = 2 * b * (k + 1) + k + b
        col = as_strided(flat[start:], shape=(m,), strides=(2 * b * step,))
        c = col.copy()
        win_start = 2 * b * (k + 1) + (k + 1) + b
        win = as_strided(flat[win_start:], shape=(m, m), strides=(2 * b * step, step))
        win -= np.multiply.outer(c, c / dk)
        band[k, 1 : m + 1] = c / dk
    return negative


def band_ldlt_solve(factor: np.ndarray, rhs: np.ndarray) -> None:
    """Solve in place for every column of ``rhs`` (shape (n, p))."""
    n, width = factor.shape
    b = width - 1
    for k in range(n):
        m = min(b, n - 1 - k)
        if m:
            rhs[k + 1 : k + m + 1] -= factor[k, 1 : m + 1, None] * rhs[k]
    rhs /= factor[:, 0, None]
    for k in range(n - 1, -1, -1):
        m = min(b, n - 1 - k)
        if m:
            rhs[k] -= factor[k, 1 : m + 1] @ rhs[k + 1 : k + m + 1]


def csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n)
