"""Fill-reducing ordering, symbolic analysis and numeric LDL^T factorization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError, NearSingularError
from . import _kernels
from .csc import CscMatrix

#: relative pivot floor of the modified Cholesky, times the column's own diagonal
PIVOT_FLOOR = 1e-14
#: negative pivots above ``-NEG_TOL * diag`` are treated as rounding noise
NEG_TOL = 1e-8
#: default static regularization of the quasi-definite factorization
DEFAULT_REG = (1e-8, 1e-8)


@dataclass(frozen=True, eq=False)
class Permutation:
    """``order[k]`` is the original index placed at position ``k``."""

    order: np.ndarray

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        n = len(order)
        seen = np.zeros(n, dtype=bool)
        if n and (order.min() < 0 or order.max() >= n):
            raise DimensionError("permutation entries out of range")
        seen[order] = True
        if not seen.all():
            raise DimensionError("permutation is not a bijection")
        object.__setattr__(self, "order", order)

    @classmethod
    def natural(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.order)

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.order)
        inv[self.order] = np.arange(len(self.order), dtype=np.int64)
        return inv


def _square_pattern(pattern: CscMatrix) -> CscMatrix:
    if pattern.nrows != pattern.ncols:
        raise DimensionError(f"expected a square pattern, got {pattern.nrows}x{pattern.ncols}")
    return pattern.symmetric_pattern()


def dense_cutoff(n: int) -> int:
    """Nodes with more neighbours than this are ordered last by AMD."""
    return max(16, int(10 * math.sqrt(n)))


def amd_ordering(pattern: CscMatrix, dense_cut: int | None = None) -> Permutation:
    """Approximate minimum degree ordering of a symmetric pattern.

    Quotient-graph elimination with element absorption and the approximate
    external degree bound; no supervariable detection.  Rows denser than
    :func:`dense_cutoff` are stripped up front and placed last.
    """
    sym = _square_pattern(pattern)
    n = sym.nrows
    cut = dense_cutoff(n) if dense_cut is None else dense_cut
    order = _kernels.amd_order(n, sym.col_ptr, sym.row_idx, cut)
    return Permutation(np.asarray(order, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class SymbolicFactor:
    """Structure of L for a given ordering.

    ``l_col_ptr``/``l_row_idx`` hold the strictly-lower pattern in factor
    order; :attr:`l_pattern` adds the diagonal back.  ``factor_ops`` is the sum
    of squared column counts (diagonal included).
    """

    perm: Permutation
    parent: np.ndarray
    l_col_ptr: np.ndarray
    l_row_idx: np.ndarray
    nnz_l: int
    factor_ops: int
    n: int

    @property
    def l_pattern(self) -> list[np.ndarray]:
        lp, li = self.l_col_ptr, self.l_row_idx
        return [np.concatenate(([j], li[lp[j]:lp[j + 1]])) for j in range(self.n)]

    @property
    def col_counts(self) -> np.ndarray:
        return np.diff(self.l_col_ptr) + 1


def symbolic_cholesky(pattern: CscMatrix, perm: Permutation | None = None) -> SymbolicFactor:
    sym = _square_pattern(pattern)
    n = sym.nrows
    perm = Permutation.natural(n) if perm is None else perm
    if len(perm) != n:
        raise DimensionError("permutation length does not match the matrix")
    parent, lp, li = _kernels.symbolic(n, sym.col_ptr, sym.row_idx, perm.order, perm.inverse)
    counts = np.diff(lp) + 1
    return SymbolicFactor(
        perm=perm,
        parent=np.asarray(parent),
        l_col_ptr=np.asarray(lp),
        l_row_idx=np.asarray(li),
        nnz_l=int(counts.sum()),
        factor_ops=int(np.sum(counts.astype(np.int64) ** 2)),
        n=n,
    )


def analyze(pattern: CscMatrix) -> SymbolicFactor:
    """AMD ordering followed by symbolic factorization."""
    return symbolic_cholesky(pattern, amd_ordering(pattern))


def _full_symmetric(a: CscMatrix) -> sp.csc_matrix:
    """Symmetric matrix rebuilt from the lower triangle of ``a``."""
    m = a.to_scipy()
    low = sp.tril(m, format="csc")
    strict = sp.tril(m, k=-1, format="csc")
    full = (low + strict.T).tocsc()
    full.sum_duplicates()
    full.sort_indices()
    return full


@dataclass(eq=False)
class LdlFactor:
    """Numeric factor ``P A P^T = L D L^T`` ready for repeated solves."""

    sym: SymbolicFactor
    lx: np.ndarray
    d: np.ndarray
    l_row_idx: np.ndarray
    modified_pivots: int = 0
    solves: int = field(default=0, repr=False)

    @property
    def n(self) -> int:
        return self.sym.n

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        vec = b.ndim == 1
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs has {b.shape[0]} rows, factor is {self.n}")
        order = self.sym.perm.order
        x = np.array(b[order].reshape(self.n, -1), dtype=np.float64, order="C")
        _kernels.ldl_solve(self.n, self.sym.l_col_ptr, self.l_row_idx, self.lx, self.d, x)
        out = np.empty_like(x)
        out[order] = x
        self.solves += 1
        return out[:, 0] if vec else out

    def inertia(self) -> tuple[int, int]:
        return int(np.sum(self.d > 0)), int(np.sum(self.d < 0))


def ldl_factor(a: CscMatrix, sym: SymbolicFactor, reg=None, mode: int = _kernels.PIVOT_QUASIDEFINITE,
               floor: float = 0.0, negtol: float = 0.0) -> LdlFactor:
    """Numeric LDL^T of the symmetric matrix whose lower triangle is ``a``.

    ``reg`` is a per-row additive diagonal shift; ``floor`` and ``negtol``
    are scalars or per-row arrays, all in the caller's ordering.
    Raises :class:`NearSingularError` naming the failing column.
    """
    n = sym.n
    if a.nrows != n or a.ncols != n:
        raise DimensionError("matrix does not match its symbolic factor")
    full = _full_symmetric(a)
    order = sym.perm.order
    reg_perm = np.zeros(n) if reg is None else np.asarray(reg, dtype=np.float64)[order]
    floor = np.broadcast_to(np.asarray(floor, dtype=np.float64), (n,))[order].copy()
    negtol = np.broadcast_to(np.asarray(negtol, dtype=np.float64), (n,))[order].copy()
    li, lx, d, bad, nmod = _kernels.ldl_numeric(
        n, full.indptr.astype(np.int64), full.indices.astype(np.int64), full.data.astype(np.float64),
        order, sym.perm.inverse, sym.parent, sym.l_col_ptr, sym.l_row_idx,
        reg_perm, mode, floor, negtol)
    if bad >= 0:
        raise NearSingularError(
            f"pivot {bad} (original column {int(order[bad])}) is below the floor",
            column=int(bad), original_column=int(order[bad]))
    return LdlFactor(sym=sym, lx=np.asarray(lx), d=np.asarray(d), l_row_idx=np.asarray(li),
                     modified_pivots=int(nmod))


def pivot_floors(a: CscMatrix, rel: float) -> np.ndarray:
    """``rel * |a_kk|`` per column; empty diagonals fall back to ``rel * max|diag|``."""
    diag = np.abs(a.diagonal())
    dmax = float(diag.max()) if len(diag) and diag.max() > 0 else 1.0
    return rel * np.where(diag > 0, diag, dmax)


def cholesky_factor(a: CscMatrix, sym: SymbolicFactor | None = None, strict: bool = False) -> LdlFactor:
    """Modified Cholesky of a symmetric positive (semi-)definite matrix.

    A pivot below ``PIVOT_FLOOR`` times its column's original diagonal is
    raised to that floor; one more negative than ``-NEG_TOL`` times the
    diagonal aborts.  The floor is per column because interior-point normal
    matrices mix diagonals twenty orders of magnitude apart, and a floor tied
    to the largest one would overwrite legitimate small pivots.  With
    ``strict=True`` every sub-floor pivot aborts, which turns the call into
    a positive-definiteness certificate.
    """
    sym = analyze(a) if sym is None else sym
    mode = _kernels.PIVOT_STRICT if strict else _kernels.PIVOT_MODIFIED
    return ldl_factor(a, sym, mode=mode, floor=pivot_floors(a, PIVOT_FLOOR), negtol=pivot_floors(a, NEG_TOL))


def indefinite_factor(a: CscMatrix, sym: SymbolicFactor | None = None) -> LdlFactor:
    """LDL^T without pivoting or regularization for a symmetric nonsingular matrix.

    Any inertia is accepted; a pivot below ``PIVOT_FLOOR`` times its
    column's diagonal in magnitude raises :class:`NearSingularError`.
    """
    sym = analyze(a) if sym is None else sym
    return ldl_factor(a, sym, mode=_kernels.PIVOT_QUASIDEFINITE, floor=pivot_floors(a, PIVOT_FLOOR))


def cholesky_solve(a: CscMatrix, sym: SymbolicFactor | None, b) -> np.ndarray:
    return cholesky_factor(a, sym).solve(b)


def quasidefinite_signs(k: CscMatrix, n_primal: int | None = None) -> np.ndarray:
    """+1 on the primal block, -1 on the dual block.

    Without ``n_primal`` the split is read off the diagonal: strictly negative
    entries are dual, everything else primal.
    """
    n = k.nrows
    if n_primal is not None:
        s = -np.ones(n)
        s[:n_primal] = 1.0
        return s
    return np.where(k.diagonal() < 0, -1.0, 1.0)


def ldlt_factor(k: CscMatrix, sym: SymbolicFactor | None = None, reg=DEFAULT_REG,
                n_primal: int | None = None) -> LdlFactor:
    sym = analyze(k) if sym is None else sym
    signs = quasidefinite_signs(k, n_primal)
    shift = np.where(signs > 0, reg[0], -reg[1])
    return ldl_factor(k, sym, reg=shift, mode=_kernels.PIVOT_QUASIDEFINITE)


def ldlt_solve(k: CscMatrix, rhs, reg=DEFAULT_REG, n_primal: int | None = None,
               refine: int = 2) -> tuple[np.ndarray, float]:
    """Solve a symmetric quasi-definite system; returns ``(x, residual_inf)``.

    The factorization is of the regularized matrix; up to ``refine``
    correction solves against the unregularized ``k`` remove the
    regularization error unless the residual is already at round-off level.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    fac = ldlt_factor(k, reg=reg, n_primal=n_primal)
    full = _full_symmetric(k)
    x = fac.solve(rhs)
    r = rhs - full @ x
    tol = 1e-15 * (1.0 + np.max(np.abs(rhs), initial=0.0))
    for _ in range(refine):
        if np.max(np.abs(r), initial=0.0) <= tol:
            break
        x = x + fac.solve(r)
        r = rhs - full @ x
    return x, float(np.max(np.abs(r), initial=0.0))


def symmetric_full(a: CscMatrix) -> sp.csc_matrix:
    return _full_symmetric(a)
