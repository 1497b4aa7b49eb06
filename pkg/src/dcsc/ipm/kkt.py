"""Newton systems of the primal-dual method.

With ``D = Lam Y^-1`` the Newton equations

    G dx - A' dlam - E' dnu = -r_d
    A dx - dy               = -r_p
    E dx                    = -r_e
    Lam dy + Y dlam         = -r_ly

are reduced either to the symmetric quasi-definite augmented system

    [ G   A'     E' ] [ dx      ]   [ -r_d                 ]
    [ A  -D^-1   0  ] [ -dlam   ] = [ -r_p - Lam^-1 r_ly   ]
    [ E   0      0  ] [ -dnu    ]   [ -r_e                 ]

or, eliminating the inequality block, to the normal equations

    (G + A' D A) dx - E' dnu = -r_d - A' D (r_p + Lam^-1 r_ly)

followed by ``dy = A dx + r_p`` and ``dlam = -Y^-1 (r_ly + Lam dy)``.
Static regularization (+delta_p on the primal diagonal, -delta_d on the dual
one) keeps every pivot away from zero.  The sparsity pattern is fixed for a
given problem, so ordering and symbolic analysis run once per solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import ContractError
from ..sparse import CscMatrix, DEFAULT_REG, amd_ordering, cholesky_factor, ldl_factor, symbolic_cholesky
from ..sparse import _kernels
from .qp import IpmIterate, QuadraticProgram, Residuals, SolveStats, residuals

NORMAL = "normal"
AUGMENTED = "augmented"
AUTO = "auto"
#: a row with more than this fraction of n structural nonzeros counts as dense
DENSE_ROW_FRACTION = 0.10
#: correction solves run while the direct residual exceeds this (relative).
#: The static regularization alone leaves errors of order delta ~ 1e-8, so the
#: trigger has to sit well below that for the two paths to agree to 1e-9.
REFINE_TOL = 1e-12
MAX_REFINE = 3


@dataclass(frozen=True)
class Direction:
    dx: np.ndarray
    dy: np.ndarray
    dlam: np.ndarray
    dnu: np.ndarray

    def inf_norm(self) -> float:
        return float(max(np.max(np.abs(v), initial=0.0) for v in (self.dx, self.dy, self.dlam, self.dnu)))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dx, self.dy, self.dlam, self.dnu])


def has_dense_rows(A: CscMatrix, fraction: float = DENSE_ROW_FRACTION) -> bool:
    if A.nrows == 0 or A.ncols == 0:
        return False
    counts = np.bincount(A.row_idx, minlength=A.nrows)
    return bool(np.any(counts > fraction * A.ncols))


def choose_path(qp: QuadraticProgram, path: str = AUTO) -> str:
    """Normal equations only for inequality-only problems without dense rows."""
    if path in (NORMAL, AUGMENTED):
        return path
    if path != AUTO:
        raise ContractError(f"unknown linear path {path!r}")
    if qp.p == 0 and not has_dense_rows(qp.A):
        return NORMAL
    return AUGMENTED


class KktSystem:
    """Factor-once, solve-twice Newton system for one QP.

    ``factor(it)`` performs one numeric factorization at the scaling of ``it``;
    ``solve(it, res, r_ly)`` may then be called repeatedly with different
    complementarity right-hand sides.
    """

    def __init__(self, qp: QuadraticProgram, path: str = AUTO, reg=DEFAULT_REG, stats: SolveStats | None = None):
        self.qp = qp
        self.path = choose_path(qp, path)
        self.reg = reg
        self.stats = stats if stats is not None else SolveStats()
        self.stats.path = self.path
        self._G = qp.G.to_scipy()
        self._A = qp.A.to_scipy()
        self._At = self._A.T.tocsc()
        self._E = qp.E.to_scipy()
        self._Et = self._E.T.tocsc()
        self._fac = None
        n, m, p = qp.n, qp.m, qp.p
        if self.path == AUGMENTED:
            self.size = n + m + p
            g = sp.tril(self._G, format="coo")
            a = self._A.tocoo()
            e = self._E.tocoo()
            # fixed lower-triangle triplets; the dual diagonal is appended per iteration
            self._rows = np.concatenate([g.row, a.row + n, e.row + n + m]).astype(np.int64)
            self._cols = np.concatenate([g.col, a.col, e.col]).astype(np.int64)
            self._vals = np.concatenate([g.data, a.data, e.data])
            self._signs = np.concatenate([np.ones(n), -np.ones(m + p)])
        else:
            self.size = n + p
            self._signs = np.concatenate([np.ones(n), -np.ones(p)])
            pat = (abs(self._At) @ abs(self._A) + abs(self._G)).tocoo()
            keep = pat.row >= pat.col
            e = self._E.tocoo()
            self._rows = np.concatenate([pat.row[keep], e.row + n]).astype(np.int64)
            self._cols = np.concatenate([pat.col[keep], e.col]).astype(np.int64)
            self._vals = np.ones(len(self._rows))
        diag = np.arange(self.size, dtype=np.int64)
        self._pattern_matrix(CscMatrix.from_triplets(
            np.concatenate([self._rows, diag]), np.concatenate([self._cols, diag]),
            np.ones(len(self._rows) + self.size), self.size, self.size))

    # -- structure -----------------------------------------------------------
    def _pattern_matrix(self, pattern: CscMatrix) -> None:
        self.sym = symbolic_cholesky(pattern, amd_ordering(pattern))
        self.stats.symbolic_analyses += 1
        self.stats.factor_ops = self.sym.factor_ops
        self.stats.nnz_l = self.sym.nnz_l

    # -- numeric -------------------------------------------------------------
    def factor(self, it: IpmIterate):
        qp = self.qp
        n, m, p = qp.n, qp.m, qp.p
        with np.errstate(over="ignore", divide="ignore"):
            d = it.lam / it.y if m else np.zeros(0)
            self._dinv = it.y / it.lam if m else np.zeros(0)
        self._d = d
        dp, dd = self.reg
        shift = np.where(self._signs > 0, dp, -dd)
        diag = np.arange(self.size, dtype=np.int64)
        if self.path == AUGMENTED:
            dvals = np.concatenate([np.zeros(n), -self._dinv, np.zeros(p)])
            mat = CscMatrix.from_triplets(np.concatenate([self._rows, diag]), np.concatenate([self._cols, diag]),
                                          np.concatenate([self._vals, dvals]), self.size, self.size)
            self._fac = ldl_factor(mat, self.sym, reg=shift, mode=_kernels.PIVOT_QUASIDEFINITE)
        else:
            mmat = (self._G + self._At @ sp.diags(d) @ self._A).tocsc() if m else self._G.tocsc()
            self._M = mmat
            low = sp.tril(mmat, format="coo")
            e = self._E.tocoo()
            mat = CscMatrix.from_triplets(np.concatenate([low.row, e.row + n]), np.concatenate([low.col, e.col]),
                                          np.concatenate([low.data, e.data]), self.size, self.size)
            if p == 0:
                self._fac = cholesky_factor(mat, self.sym)
            else:
                self._fac = ldl_factor(mat, self.sym, reg=shift, mode=_kernels.PIVOT_QUASIDEFINITE)
        self.stats.factorizations += 1
        return self._fac

    def _reduced_solve(self, it: IpmIterate, r_d, r_p, r_e, r_ly) -> Direction:
        qp = self.qp
        n, m = qp.n, qp.m
        if self.path == AUGMENTED:
            rhs = np.concatenate([-r_d, -r_p - r_ly / it.lam if m else np.zeros(0), -r_e])
            sol = self._fac.solve(rhs)
            dx = sol[:n]
            dlam = -sol[n:n + m]
            dnu = -sol[n + m:]
            dy = self._A @ dx + r_p if m else np.zeros(0)
        else:
            top = -r_d
            if m:
                top = top - self._At @ (self._d * (r_p + r_ly / it.lam))
            sol = self._fac.solve(np.concatenate([top, -r_e]))
            dx = sol[:n]
            dnu = -sol[n:]
            dy = self._A @ dx + r_p if m else np.zeros(0)
            dlam = -(r_ly + it.lam * dy) / it.y if m else np.zeros(0)
        return Direction(dx, dy, dlam, dnu)

    def _full_residual(self, it: IpmIterate, r_d, r_p, r_e, r_ly, d: Direction):
        return (
            self._G @ d.dx - self._At @ d.dlam - self._Et @ d.dnu + r_d,
            self._A @ d.dx - d.dy + r_p,
            self._E @ d.dx + r_e,
            it.lam * d.dy + it.y * d.dlam + r_ly,
        )

    def solve(self, it: IpmIterate, res: Residuals, r_ly: np.ndarray) -> Direction:
        """Direction for complementarity target ``r_ly``.

        Correction solves (at most ``MAX_REFINE``) follow while the residual
        of the full, unreduced Newton system exceeds ``REFINE_TOL (1 + |rhs|)``
        and keeps shrinking.
        Measuring there, rather than on the reduced matrix, also catches
        the dual-residual information lost to cancellation when D is badly
        scaled late in the run.
        """
        if self._fac is None:
            raise ContractError("factor() must be called before solve()")
        d = self._reduced_solve(it, res.r_d, res.r_p, res.r_e, r_ly)
        self.stats.direction_solves += 1
        rho = self._full_residual(it, res.r_d, res.r_p, res.r_e, r_ly, d)
        scale = 1 + max(np.max(np.abs(v), initial=0.0) for v in (res.r_d, res.r_p, res.r_e, r_ly))
        err = max(np.max(np.abs(v), initial=0.0) for v in rho)
        for _ in range(MAX_REFINE):
            if err <= REFINE_TOL * scale:
                break
            c = self._reduced_solve(it, *rho)
            self.stats.refinement_solves += 1
            cand = Direction(d.dx + c.dx, d.dy + c.dy, d.dlam + c.dlam, d.dnu + c.dnu)
            rho_c = self._full_residual(it, res.r_d, res.r_p, res.r_e, r_ly, cand)
            err_c = max(np.max(np.abs(v), initial=0.0) for v in rho_c)
            if err_c >= err:
                break
            d, rho, err = cand, rho_c, err_c
        return d


def newton_residual(qp: QuadraticProgram, it: IpmIterate, res: Residuals, r_ly: np.ndarray,
                    dirn: Direction) -> float:
    """Infinity-norm residual of the full, unreduced Newton system, relative to ``1 + |rhs|``."""
    G, A, E = qp.G.to_scipy(), qp.A.to_scipy(), qp.E.to_scipy()
    rows = [
        G @ dirn.dx - A.T @ dirn.dlam - E.T @ dirn.dnu + res.r_d,
        A @ dirn.dx - dirn.dy + res.r_p,
        E @ dirn.dx + res.r_e,
        it.lam * dirn.dy + it.y * dirn.dlam + r_ly,
    ]
    rhs = np.concatenate([res.r_d, res.r_p, res.r_e, r_ly])
    return float(max(np.max(np.abs(r), initial=0.0) for r in rows) / (1 + np.max(np.abs(rhs), initial=0.0)))


def max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in [0, inf) keeping ``v + alpha dv >= 0``."""
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def newton_direction(qp: QuadraticProgram, it: IpmIterate, rhs_mode: str = "affine",
                     path: str = AUTO, sigma: float | None = None, system: KktSystem | None = None) -> Direction:
    """Newton direction at ``it``.

    ``affine`` targets ``y * lam = 0``.  ``corrected`` is the Mehrotra
    direction: second-order term from the affine step plus centering with
    ``sigma`` (computed from the affine step when not given).  Both solves
    share one factorization.
    """
    if not it.is_interior():
        raise ContractError("iterate must be strictly interior (y, lam > 0)")
    kkt = system if system is not None else KktSystem(qp, path)
    kkt.factor(it)
    res = residuals(qp, it)
    r_aff = it.y * it.lam
    aff = kkt.solve(it, res, r_aff)
    if rhs_mode == "affine":
        return aff
    if rhs_mode != "corrected":
        raise ContractError(f"unknown rhs_mode {rhs_mode!r}")
    r_ly = corrector_rhs(it, aff, sigma)
    return kkt.solve(it, res, r_ly)


def corrector_rhs(it: IpmIterate, aff: Direction, sigma: float | None = None) -> np.ndarray:
    m = len(it.y)
    if m == 0:
        return np.zeros(0)
    mu = it.mu
    if sigma is None:
        ap = min(1.0, max_step(it.y, aff.dy))
        ad = min(1.0, max_step(it.lam, aff.dlam))
        mu_aff = float((it.y + ap * aff.dy) @ (it.lam + ad * aff.dlam)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
    return it.y * it.lam + aff.dy * aff.dlam - sigma * mu
