"""Convex QP container and primal-dual iterate types.

The problem is ``min 1/2 x'Gx + c'x  s.t.  Ax >= b,  Ex = h``.  Optimality:

    r_d  = Gx - A'lam - E'nu + c = 0
    r_p  = Ax - y - b          = 0
    r_e  = Ex - h              = 0
    y * lam = 0,  y, lam >= 0
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DimensionError
from ..sparse import CscMatrix

OPTIMAL = "Optimal"
MAX_ITERATIONS = "MaxIterations"
NEAR_SINGULAR = "NearSingular"
INFEASIBLE = "Infeasible-suspect"


@dataclass(frozen=True)
class QpNames:
    """Named contiguous blocks of variables, inequality rows and equality rows.

    ``uncounted`` lists equality blocks kept out of structural row counts
    (gauge and balance rows that the formulation tables do not list).
    """

    var: dict = field(default_factory=dict)
    ineq: dict = field(default_factory=dict)
    eq: dict = field(default_factory=dict)
    uncounted: frozenset = frozenset()

    @staticmethod
    def _lookup(table: dict, name: str, what: str) -> slice:
        if name not in table:
            raise KeyError(f"no {what} block named {name!r}")
        return table[name]

    def var_slice(self, name: str) -> slice:
        return self._lookup(self.var, name, "variable")

    def ineq_slice(self, name: str) -> slice:
        return self._lookup(self.ineq, name, "inequality")

    def eq_slice(self, name: str) -> slice:
        return self._lookup(self.eq, name, "equality")


def _blocks(entries) -> dict:
    """``[(name, size), ...]`` to ordered contiguous slices."""
    out, at = {}, 0
    for name, size in entries:
        out[name] = slice(at, at + int(size))
        at += int(size)
    return out


@dataclass(frozen=True, eq=False)
class QuadraticProgram:
    G: CscMatrix
    c: np.ndarray
    A: CscMatrix
    b: np.ndarray
    E: CscMatrix
    h: np.ndarray
    names: QpNames = field(default_factory=QpNames)
    offset: float = 0.0  # constant dropped from the objective
    obj_scale: float = 1.0  # reported objective = obj_scale * (1/2 x'Gx + c'x + offset)

    def __post_init__(self):
        for attr in ("c", "b", "h"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=np.float64).ravel())
        n = self.G.ncols
        if self.G.nrows != n or len(self.c) != n:
            raise DimensionError("G must be n x n and c of length n")
        if self.A.ncols != n or self.A.nrows != len(self.b):
            raise DimensionError(f"A is {self.A.shape}, expected ({len(self.b)}, {n})")
        if self.E.ncols != n or self.E.nrows != len(self.h):
            raise DimensionError(f"E is {self.E.shape}, expected ({len(self.h)}, {n})")
        g = self.G.to_scipy()
        asym = abs(g - g.T)
        if asym.nnz and asym.max() > 1e-12 * max(1.0, abs(g).max()):
            raise DimensionError("G is not symmetric")

    @classmethod
    def build(cls, G, c, A=None, b=None, E=None, h=None, **kw) -> "QuadraticProgram":
        """Convenience constructor from dense or sparse blocks; missing blocks are empty."""
        from ..sparse import as_csc

        G = as_csc(G)
        n = G.ncols
        A = CscMatrix.zeros(0, n) if A is None else as_csc(A)
        E = CscMatrix.zeros(0, n) if E is None else as_csc(E)
        b = np.zeros(A.nrows) if b is None else b
        h = np.zeros(E.nrows) if h is None else h
        return cls(G, np.asarray(c, dtype=np.float64), A, b, E, h, **kw)

    @property
    def n(self) -> int:
        return self.G.ncols

    @property
    def m(self) -> int:
        return self.A.nrows

    @property
    def p(self) -> int:
        return self.E.nrows

    def objective(self, x) -> float:
        """Objective in the caller's units, constant included."""
        x = np.asarray(x, dtype=np.float64)
        return float(self.obj_scale * (0.5 * x @ self.G.matvec(x) + self.c @ x + self.offset))

    def with_rows(self, keep_ineq) -> "QuadraticProgram":
        """Copy keeping only the listed inequality rows (names re-sliced by block)."""
        keep = np.asarray(keep_ineq, dtype=np.int64)
        mask = np.zeros(self.m, dtype=bool)
        mask[keep] = True
        sizes = []
        for name, sl in self.names.ineq.items():
            sizes.append((name, int(mask[sl].sum())))
        names = replace(self.names, ineq=_blocks(sizes))
        idx = np.flatnonzero(mask)
        return replace(self, A=self.A.select_rows(idx), b=self.b[idx], names=names)


@dataclass(frozen=True, eq=False)
class IpmIterate:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    nu: np.ndarray

    @property
    def mu(self) -> float:
        m = len(self.y)
        return float(self.y @ self.lam / m) if m else 0.0

    def is_interior(self) -> bool:
        return bool(np.all(self.y > 0) and np.all(self.lam > 0))

    def copy(self) -> "IpmIterate":
        return IpmIterate(self.x.copy(), self.y.copy(), self.lam.copy(), self.nu.copy())


@dataclass(frozen=True)
class Residuals:
    r_d: np.ndarray
    r_p: np.ndarray
    r_e: np.ndarray


def residuals(qp: QuadraticProgram, it: IpmIterate) -> Residuals:
    r_d = qp.G.matvec(it.x) + qp.c
    if qp.m:
        r_d = r_d - qp.A.to_scipy().T @ it.lam
    if qp.p:
        r_d = r_d - qp.E.to_scipy().T @ it.nu
    r_p = qp.A.matvec(it.x) - it.y - qp.b if qp.m else np.zeros(0)
    r_e = qp.E.matvec(it.x) - qp.h if qp.p else np.zeros(0)
    return Residuals(r_d, r_p, r_e)


def _inf(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


def scaled_residuals(qp: QuadraticProgram, it: IpmIterate, res: Residuals | None = None) -> tuple:
    """``(dual, primal, equality, gap)`` scaled as in the termination test."""
    res = residuals(qp, it) if res is None else res
    return (
        _inf(res.r_d) / (1 + _inf(qp.c)),
        _inf(res.r_p) / (1 + _inf(qp.b)),
        _inf(res.r_e) / (1 + _inf(qp.h)),
        it.mu,
    )


@dataclass
class SolveStats:
    factorizations: int = 0
    direction_solves: int = 0
    refinement_solves: int = 0
    symbolic_analyses: int = 0
    factor_ops: int = 0
    nnz_l: int = 0
    path: str = ""


@dataclass(eq=False)
class IpmSolution:
    iterate: IpmIterate
    status: str
    iterations: int
    residuals: tuple  # (r_d, r_p, r_e, gap), scaled
    trace: list
    objective: float
    stats: SolveStats
    message: str = ""

    @property
    def x(self) -> np.ndarray:
        return self.iterate.x

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL
