"""Sparse Newton directions for the PTDF problem through ``p_bus = B_bus theta``.

With ``T = blockdiag(B_red, 1)`` acting on ``x = [p_bus, p_ref]`` the Newton
system in ``z = T^-1 x`` has blocks ``T'GT``, ``A T`` and ``E T``.  The dense
PTDF rows become ``PTDF_red B_red = B_f_red`` exactly, so the coefficient is
as sparse as the angle formulation.  The first block row is the original one
left-multiplied by ``T'``, which leaves the slack and dual components
unchanged and maps the primal part back as ``dp_bus = B_red dtheta``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from ..errors import ContractError
from ..network import DcNetwork
from ..sparse import DROP_TOL, CscMatrix
from .kkt import AUGMENTED, Direction, KktSystem
from .qp import IpmIterate, QuadraticProgram, Residuals, residuals

FLOW_BLOCKS = ("flow_lower", "flow_upper")


@dataclass(frozen=True, eq=False)
class TransformedDirection:
    dtheta: np.ndarray  # non-reference angles
    dp_bus: np.ndarray  # B_red dtheta
    direction: Direction  # in the original variables (dx = [dp_bus, dp_ref])
    system: QuadraticProgram  # the transformed problem whose Newton system was solved


def transform_matrix(qp: QuadraticProgram, net: DcNetwork) -> sp.csc_matrix:
    names = qp.names
    if "p_bus" not in names.var:
        raise ContractError("the QP has no 'p_bus' variable block; build it with build_ptdf_nodal")
    sl = names.var["p_bus"]
    nred = net.n_bus - 1
    if sl.stop - sl.start != nred:
        raise ContractError(f"p_bus block has {sl.stop - sl.start} entries; the network has {nred} non-reference buses")
    blocks = []
    if sl.start:
        blocks.append(sp.identity(sl.start))
    blocks.append(net.b_bus_red.to_scipy())
    if qp.n - sl.stop:
        blocks.append(sp.identity(qp.n - sl.stop))
    return sp.block_diag(blocks, format="csc")


def transform_qp(qp: QuadraticProgram, net: DcNetwork) -> QuadraticProgram:
    """The sparse problem in ``z = [theta_red, ...]``."""
    t = transform_matrix(qp, net)
    g = qp.G.to_scipy()
    a = (qp.A.to_scipy() @ t).tolil()
    sl = qp.names.var["p_bus"]
    bf = net.b_f_red.to_scipy().tocsr()
    lim = _flow_branches(qp, net)
    for block, sign in zip(FLOW_BLOCKS, (1.0, -1.0)):
        if block in qp.names.ineq:
            rows = np.arange(qp.m)[qp.names.ineq[block]]
            # PTDF_red B_red is B_f_red up to round-off; use the exact sparse rows
            exact = sp.lil_matrix((len(rows), qp.n))
            exact[:, sl] = sign * bf[lim]
            a[rows, :] = exact
    return replace(
        qp,
        G=CscMatrix.from_scipy((t.T @ g @ t).tocsc()).compress(DROP_TOL),
        c=t.T @ qp.c,
        A=CscMatrix.from_scipy(a.tocsc()).compress(DROP_TOL),
        E=CscMatrix.from_scipy((qp.E.to_scipy() @ t).tocsc()).compress(DROP_TOL),
    )


def _flow_branches(qp: QuadraticProgram, net: DcNetwork) -> np.ndarray:
    lim = net.limited
    n = qp.names.ineq.get("flow_lower", slice(0, 0))
    if n.stop - n.start != len(lim):
        raise ContractError("flow rows do not match the network's limited branches")
    return lim


def transformed_newton_direction(qp_ptdf: QuadraticProgram, net: DcNetwork, iterate: IpmIterate,
                                 r_ly: np.ndarray | None = None) -> TransformedDirection:
    """Solve the sparse transformed Newton system at ``iterate`` (affine right side by default)."""
    if not iterate.is_interior():
        raise ContractError("iterate must be strictly interior (y, lam > 0)")
    t = transform_matrix(qp_ptdf, net)
    qp_t = transform_qp(qp_ptdf, net)
    res = residuals(qp_ptdf, iterate)
    # first block row multiplied by T'
    res_t = Residuals(t.T @ res.r_d, res.r_p, res.r_e)
    it_t = IpmIterate(np.zeros(qp_ptdf.n), iterate.y, iterate.lam, iterate.nu)
    r_ly = iterate.y * iterate.lam if r_ly is None else r_ly
    kkt = KktSystem(qp_t, AUGMENTED)
    kkt.factor(it_t)
    dz = kkt.solve(it_t, res_t, r_ly)
    sl = qp_ptdf.names.var["p_bus"]
    dx = t @ dz.dx
    dtheta = dz.dx[sl]
    return TransformedDirection(
        dtheta=dtheta, dp_bus=dx[sl],
        direction=Direction(dx, dz.dy, dz.dlam, dz.dnu), system=qp_t)


def kkt_nnz(qp: QuadraticProgram) -> int:
    """Nonzeros of the full augmented coefficient ``[[G, A', E'], [A, -Y/Lam, 0], [E, 0, 0]]``."""
    return qp.G.compress(DROP_TOL).nnz + 2 * qp.A.compress(DROP_TOL).nnz + 2 * qp.E.compress(DROP_TOL).nnz + qp.m
