"""PTDF OPF written in nodal injections, the form the sparsity transformation acts on.

Variables are ``x = [p_bus (non-reference buses), p_ref]``.  Flow rows use
the reduced PTDF, which is fully dense; the transformation replaces them by
``B_f`` through ``p_bus = B_bus theta``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..caseio.model import GridCase
from ..errors import ContractError
from ..ipm.qp import QpNames, QuadraticProgram, _blocks
from ..network import DcNetwork, PtdfMatrix, bus_loads, compute_ptdf
from ..sparse import DROP_TOL, CscMatrix
from .build import FormulationBundle, FormulationKind, cost_scale, nodal_cost


def build_ptdf_nodal(case: GridCase, net: DcNetwork, ptdf: PtdfMatrix | None = None) -> FormulationBundle:
    gens = [g for g in case.generators if g.status]
    idx = case.bus_index
    gbus = np.array([idx[g.bus] for g in gens], dtype=np.int64)
    if len(set(gbus.tolist())) != len(gens):
        raise ContractError("nodal form needs at most one generator per bus; merge colocated generators first")
    ptdf = compute_ptdf(net) if ptdf is None else ptdf
    base, s = case.base_mva, cost_scale(case)
    nb = net.n_bus
    order = np.append(net.non_ref, net.ref_bus)  # variable j is bus order[j]
    pd = bus_loads(case)
    a = np.zeros(nb)
    bb = np.zeros(nb)
    lo = -pd / base
    hi = -pd / base
    offset = 0.0
    for g, k in zip(gens, gbus):
        an, bn, cn = nodal_cost(g.a, g.b, g.c, pd[k])
        a[k], bb[k] = an, bn
        offset += cn / s
        lo[k] = (g.pmin - pd[k]) / base
        hi[k] = (g.pmax - pd[k]) / base
    lim = net.limited
    fmax = net.rate_a[lim] / base
    h = ptdf.data[lim][:, order].copy()
    h[np.abs(h) < DROP_TOL] = 0.0
    eye = sp.identity(nb, format="csc")
    A = sp.vstack([sp.csc_matrix(h), -sp.csc_matrix(h), eye, -eye], format="csc")
    bvec = np.concatenate([-fmax, -fmax, lo[order], -hi[order]])
    E = sp.csc_matrix(np.ones((1, nb)))
    G = sp.diags(2 * a[order] * base * base / s)
    names = QpNames(
        var=_blocks([("p_bus", nb - 1), ("p_ref", 1)]),
        ineq=_blocks([("flow_lower", len(lim)), ("flow_upper", len(lim)), ("bus_lower", nb), ("bus_upper", nb)]),
        eq=_blocks([("balance", 1)]),
        uncounted=frozenset({"balance"}))
    qp = QuadraticProgram(
        G=CscMatrix.from_scipy(sp.csc_matrix(G)), c=bb[order] * base / s,
        A=CscMatrix.from_scipy(A).compress(DROP_TOL), b=bvec,
        E=CscMatrix.from_scipy(E), h=np.zeros(1), names=names, offset=offset, obj_scale=s)
    fb = np.column_stack([np.zeros(len(lim), dtype=np.int64), lim])
    return FormulationBundle(
        qp=qp, kind=FormulationKind.PTDF, case=case, net=net, ptdf=ptdf, periods=1,
        loads=pd[None, :], scale_factors=np.ones((1, nb)), flow_branches=fb,
        ramps=np.full(len(gens), np.nan), cost_scale=s, meta={"nodal": True, "bus_order": order})
