"""Row-compressed sparse matrices and banded LDL^T factorisations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = ["BandFactor", "CSRMatrix", "FactorizationError"]


class FactorizationError(ArithmeticError):
    """Zero or non-finite pivot in a factorisation without pivoting."""


@dataclass(frozen=True)
class CSRMatrix:
    """Square CSR matrix with sorted column indices and no stored zeros."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n: int
    symmetric: bool = False

    @classmethod
    def from_triplets(cls, rows, cols, vals, n: int, *, symmetric: bool = False) -> "CSRMatrix":
        """Sum duplicates, drop exact zeros, sort by (row, col)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size:
            if rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n:
                raise IndexError("triplet index out of range")
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        vals = vals[order]
        uniq, start = np.unique(key, return_index=True)
        summed = np.add.reduceat(vals, start) if vals.size else vals
        keep = summed != 0.0
        uniq = uniq[keep]
        summed = summed[keep]
        r = uniq // n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(indptr, (uniq % n).astype(np.int64), summed.astype(np.float64), n, symmetric)

    @classmethod
    def diag(cls, values) -> "CSRMatrix":
        values = np.asarray(values, dtype=np.float64)
        idx = np.arange(values.size)
        return cls.from_triplets(idx, idx, values, values.size, symmetric=True)

    def triplets(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return rows, self.indices, self.data

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return kernels.csr_matvec(self.indptr, self.indices, self.data, np.ascontiguousarray(x))
        return np.column_stack([self @ x[:, c] for c in range(x.shape[1])])

    def diagonal(self) -> np.ndarray:
        rows, cols, vals = self.triplets()
        out = np.zeros(self.n)
        on = rows == cols
        out[rows[on]] = vals[on]
        return out

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        rows, cols, vals = self.triplets()
        out[rows, cols] = vals
        return out

    def transpose(self) -> "CSRMatrix":
        rows, cols, vals = self.triplets()
        return CSRMatrix.from_triplets(cols, rows, vals, self.n, symmetric=self.symmetric)

    def asymmetry(self) -> float:
        """max |A - A^T| / max |A|."""
        scale = np.abs(self.data).max() if self.data.size else 1.0
        diff = CSRMatrix.from_triplets(
            np.concatenate([self.triplets()[0], self.indices]),
            np.concatenate([self.indices, self.triplets()[0]]),
            np.concatenate([self.data, -self.data]),
            self.n,
        )
        return float(np.abs(diff.data).max() / scale) if diff.data.size else 0.0

    def add(self, other: "CSRMatrix", alpha: float = 1.0) -> "CSRMatrix":
        r1, c1, v1 = self.triplets()
        r2, c2, v2 = other.triplets()
        return CSRMatrix.from_triplets(
            np.concatenate([r1, r2]),
            np.concatenate([c1, c2]),
            np.concatenate([v1, alpha * v2]),
            self.n,
            symmetric=self.symmetric and other.symmetric,
        )

    def add_diagonal(self, values) -> "CSRMatrix":
        return self.add(CSRMatrix.diag(values))

    def submatrix(self, keep) -> "CSRMatrix":
        """Principal submatrix on the index array ``keep`` (in that order)."""
        keep = np.asarray(keep, dtype=np.int64)
        where = np.full(self.n, -1, dtype=np.int64)
        where[keep] = np.arange(keep.size)
        rows, cols, vals = self.triplets()
        sel = (where[rows] >= 0) & (where[cols] >= 0)
        return CSRMatrix.from_triplets(
            where[rows[sel]], where[cols[sel]], vals[sel], keep.size, symmetric=self.symmetric
        )

    def permute(self, perm) -> "CSRMatrix":
        """P A P^T with new index i holding old index perm[i]."""
        return self.submatrix(perm)

    def bandwidth(self) -> int:
        rows, cols, _ = self.triplets()
        return int(np.abs(rows - cols).max()) if rows.size else 0

    def lower_band(self) -> np.ndarray:
        """Lower band storage band[k, d] = A[k + d, k] (A assumed symmetric)."""
        b = self.bandwidth()
        band = np.zeros((self.n, b + 1))
        rows, cols, vals = self.triplets()
        low = rows >= cols
        band[cols[low], rows[low] - cols[low]] = vals[low]
        return band


class BandFactor:
    """LDL^T factorisation of a symmetric matrix, no pivoting.

    ``negative`` counts negative pivots, which by Sylvester's law of inertia
    is the number of negative eigenvalues of the factored matrix.
    """

    def __init__(self, matrix: CSRMatrix, *, pivot_tol: float = 0.0):
        self.n = matrix.n
        self._band = np.ascontiguousarray(matrix.lower_band())
        try:
            self.negative = int(kernels.band_ldlt(self._band, pivot_tol))
        except ZeroDivisionError as exc:
            raise FactorizationError(str(exc)) from None

    @property
    def pivots(self) -> np.ndarray:
        return self._band[:, 0].copy()

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        vec = rhs.ndim == 1
        work = np.ascontiguousarray(rhs.reshape(self.n, -1).copy())
        kernels.band_ldlt_solve(self._band, work)
        return work[:, 0] if vec else work
