"""Column-compressed sparse matrix.

The arrays are plain numpy buffers so they can be handed straight to the
compiled kernels.  Products and stacking go through ``scipy.sparse``;
:meth:`CscMatrix.to_scipy` and :meth:`CscMatrix.from_scipy` are the bridge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError

#: magnitudes below this are removed by :meth:`CscMatrix.compress`
DROP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CscMatrix:
    nrows: int
    ncols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.col_ptr) != self.ncols + 1:
            raise DimensionError("col_ptr must have ncols + 1 entries")
        if len(self.row_idx) != len(self.values) or self.col_ptr[-1] != len(self.row_idx):
            raise DimensionError("col_ptr[-1], row_idx and values disagree on nnz")

    # construction -----------------------------------------------------------
    @classmethod
    def from_triplets(cls, rows, cols, vals, nrows: int, ncols: int) -> "CscMatrix":
        """Assemble from coordinate triplets, summing duplicates.

        Explicit zeros (including cancelled duplicates) are kept until
        :meth:`compress` is called.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (len(rows) == len(cols) == len(vals)):
            raise DimensionError("triplet arrays must have equal length")
        if nrows < 0 or ncols < 0:
            raise DimensionError("negative dimension")
        if len(rows):
            if rows.min() < 0 or rows.max() >= nrows:
                raise DimensionError(f"row index out of range for {nrows} rows")
            if cols.min() < 0 or cols.max() >= ncols:
                raise DimensionError(f"column index out of range for {ncols} columns")
        order = np.lexsort((rows, cols))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            keep = np.ones(len(rows), dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(keep)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        col_ptr = np.zeros(ncols + 1, dtype=np.int64)
        np.add.at(col_ptr, cols + 1, 1)
        np.cumsum(col_ptr, out=col_ptr)
        return cls(int(nrows), int(ncols), col_ptr, rows, vals)

    @classmethod
    def from_dense(cls, a) -> "CscMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        cols, rows = np.nonzero(a.T)
        return cls.from_triplets(rows, cols, a[rows, cols], a.shape[0], a.shape[1])

    @classmethod
    def from_scipy(cls, m) -> "CscMatrix":
        m = sp.csc_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr.astype(np.int64),
                   m.indices.astype(np.int64), m.data.astype(np.float64))

    @classmethod
    def identity(cls, n: int) -> "CscMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "CscMatrix":
        return cls(nrows, ncols, np.zeros(ncols + 1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64), np.zeros(0))

    # views ------------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.col_ptr[-1])

    def to_scipy(self) -> sp.csc_matrix:
        return sp.csc_matrix((self.values, self.row_idx, self.col_ptr), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        cols = np.repeat(np.arange(self.ncols), np.diff(self.col_ptr))
        np.add.at(out, (self.row_idx, cols), self.values)
        return out

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cols = np.repeat(np.arange(self.ncols, dtype=np.int64), np.diff(self.col_ptr))
        return self.row_idx.copy(), cols, self.values.copy()

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def diagonal(self) -> np.ndarray:
        r, c, v = self.triplets()
        d = np.zeros(min(self.shape))
        on = r == c
        np.add.at(d, r[on], v[on])
        return d

    # algebra ----------------------------------------------------------------
    def compress(self, tol: float = DROP_TOL) -> "CscMatrix":
        """Drop stored entries with ``|value| < tol``."""
        keep = np.abs(self.values) >= tol
        if keep.all():
            return self
        r, c, v = self.triplets()
        return CscMatrix.from_triplets(r[keep], c[keep], v[keep], self.nrows, self.ncols)

    def transpose(self) -> "CscMatrix":
        r, c, v = self.triplets()
        return CscMatrix.from_triplets(c, r, v, self.ncols, self.nrows)

    @property
    def T(self) -> "CscMatrix":
        return self.transpose()

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.ncols:
            raise DimensionError(f"expected vector of length {self.ncols}, got {x.shape[0]}")
        return self.to_scipy() @ x

    def __matmul__(self, other):
        if isinstance(other, CscMatrix):
            return CscMatrix.from_scipy(self.to_scipy() @ other.to_scipy())
        return self.matvec(other)

    def scale_rows(self, s) -> "CscMatrix":
        s = np.asarray(s, dtype=np.float64)
        return CscMatrix(self.nrows, self.ncols, self.col_ptr, self.row_idx, self.values * s[self.row_idx])

    def select_rows(self, rows) -> "CscMatrix":
        return CscMatrix.from_scipy(self.to_scipy().tocsr()[np.asarray(rows, dtype=np.int64)])

    def select_cols(self, cols) -> "CscMatrix":
        return CscMatrix.from_scipy(self.to_scipy()[:, np.asarray(cols, dtype=np.int64)])

    def pattern(self) -> "CscMatrix":
        """Same structure with every stored value set to one."""
        return CscMatrix(self.nrows, self.ncols, self.col_ptr, self.row_idx, np.ones(self.nnz))

    def symmetric_pattern(self) -> "CscMatrix":
        """Structural pattern of ``A + A^T`` (square input)."""
        if self.nrows != self.ncols:
            raise DimensionError("symmetric_pattern needs a square matrix")
        r, c, _ = self.triplets()
        rr = np.concatenate([r, c])
        cc = np.concatenate([c, r])
        return CscMatrix.from_triplets(rr, cc, np.ones(len(rr)), self.nrows, self.ncols).pattern()

    def lower_count(self) -> int:
        """Number of stored entries on or below the diagonal."""
        r, c, _ = self.triplets()
        return int(np.count_nonzero(r >= c))

    def check(self) -> None:
        """Raise if the CSC invariants do not hold."""
        cp = self.col_ptr
        if cp[0] != 0 or np.any(np.diff(cp) < 0):
            raise DimensionError("col_ptr must start at 0 and be non-decreasing")
        if self.nnz and (self.row_idx.min() < 0 or self.row_idx.max() >= self.nrows):
            raise DimensionError("row index out of range")
        for j in range(self.ncols):
            seg = self.row_idx[cp[j]:cp[j + 1]]
            if np.any(np.diff(seg) <= 0):
                raise DimensionError(f"row indices of column {j} not strictly increasing")

    def __repr__(self) -> str:
        return f"CscMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def vstack(blocks) -> CscMatrix:
    return CscMatrix.from_scipy(sp.vstack([b.to_scipy() for b in blocks], format="csc"))


def hstack(blocks) -> CscMatrix:
    return CscMatrix.from_scipy(sp.hstack([b.to_scipy() for b in blocks], format="csc"))


def as_csc(m) -> CscMatrix:
    if isinstance(m, CscMatrix):
        return m
    if sp.issparse(m):
        return CscMatrix.from_scipy(m)
    return CscMatrix.from_dense(m)
