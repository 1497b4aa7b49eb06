"""DC network matrices (incidence, B_f, B_bus) and the dense PTDF."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .caseio.model import GridCase
from .caseio.preprocess import reference_bus
from .caseio.validate import bus_components
from .errors import CaseError, DimensionError, NearSingularError
from .sparse import CscMatrix, analyze, cholesky_factor, indefinite_factor

#: PTDF column blocks solved per factor sweep
PTDF_BLOCK = 256


@dataclass(frozen=True, eq=False)
class DcNetwork:
    """Branch/bus matrices in per unit; flows and injections convert with ``base_mva``.

    Rows follow the case's in-service branch order and columns its bus order.
    ``rate_a`` is in MW, zero meaning the branch carries no flow limit.
    """

    incidence_full: CscMatrix
    b_f_full: CscMatrix
    b_bus_full: CscMatrix
    b_f_red: CscMatrix
    b_bus_red: CscMatrix
    ref_bus: int
    bus_ids: np.ndarray
    x: np.ndarray
    rate_a: np.ndarray
    base_mva: float
    branch_ends: np.ndarray  # (|L|, 2) internal from/to indices

    @property
    def n_bus(self) -> int:
        return self.b_bus_full.nrows

    @property
    def n_branch(self) -> int:
        return self.b_f_full.nrows

    @property
    def non_ref(self) -> np.ndarray:
        return np.delete(np.arange(self.n_bus), self.ref_bus)

    @property
    def limited(self) -> np.ndarray:
        return np.flatnonzero(self.rate_a > 0)

    def bus_position(self, bus_id: int) -> int:
        hit = np.flatnonzero(self.bus_ids == bus_id)
        if not len(hit):
            raise CaseError(f"bus {bus_id} is not in the network")
        return int(hit[0])


@dataclass(frozen=True, eq=False)
class PtdfMatrix:
    """Dense ``|L| x |B|`` sensitivities; the reference column is zero."""

    data: np.ndarray
    ref_bus: int

    @property
    def reduced(self) -> np.ndarray:
        return np.delete(self.data, self.ref_bus, axis=1)

    def flows(self, injection) -> np.ndarray:
        return self.data @ np.asarray(injection, dtype=np.float64)


def build_network(case: GridCase) -> DcNetwork:
    """Assemble C, X^-1 C and C^T X^-1 C for the in-service part of ``case``.

    Orientation is +1 at the from-bus and -1 at the to-bus, so a positive
    flow runs from -> to.
    """
    comps = bus_components(case)
    if len(comps) > 1:
        raise CaseError(f"network is disconnected into {len(comps)} islands: {comps}")
    idx = case.bus_index
    ref = idx[reference_bus(case)]
    lines = [br for br in case.branches if br.status]
    nl, nb = len(lines), len(case.buses)
    if nl == 0 and nb > 1:
        raise CaseError("network has no in-service branches")
    fr = np.array([idx[br.from_bus] for br in lines], dtype=np.int64)
    to = np.array([idx[br.to_bus] for br in lines], dtype=np.int64)
    x = np.array([br.x for br in lines], dtype=np.float64)
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise CaseError("branch reactances must be finite and nonzero")
    rows = np.repeat(np.arange(nl), 2)
    cols = np.column_stack([fr, to]).ravel()
    sign = np.tile([1.0, -1.0], nl)
    inc = CscMatrix.from_triplets(rows, cols, sign, nl, nb)
    bf = CscMatrix.from_triplets(rows, cols, sign / np.repeat(x, 2), nl, nb)
    bbus = CscMatrix.from_scipy(inc.to_scipy().T @ bf.to_scipy())
    # a branch whose two admittance terms cancel leaves explicit zeros behind
    bbus = bbus.compress(0.0)
    keep = np.delete(np.arange(nb), ref)
    return DcNetwork(
        incidence_full=inc,
        b_f_full=bf,
        b_bus_full=bbus,
        b_f_red=bf.select_cols(keep),
        b_bus_red=bbus.select_rows(keep).select_cols(keep),
        ref_bus=int(ref),
        bus_ids=np.array(case.bus_ids, dtype=np.int64),
        x=x,
        rate_a=np.array([br.rate_a for br in lines], dtype=np.float64),
        base_mva=float(case.base_mva),
        branch_ends=np.column_stack([fr, to]),
    )


def spd_certificate(net: DcNetwork) -> bool:
    """True when a strict Cholesky of the reduced B_bus succeeds."""
    try:
        cholesky_factor(net.b_bus_red, strict=True)
    except NearSingularError:
        return False
    return True


def factor_b_bus_red(net: DcNetwork):
    """Factor of the reduced B_bus: Cholesky when positive definite.

    Negative (series-compensating) reactances can make it indefinite; it is
    then factored as LDL^T without pivoting, which needs only nonsingularity.
    """
    sym = analyze(net.b_bus_red)
    try:
        return cholesky_factor(net.b_bus_red, sym, strict=True)
    except NearSingularError:
        return indefinite_factor(net.b_bus_red, sym)


def compute_ptdf(net: DcNetwork, factor=None) -> PtdfMatrix:
    """PTDF = B_f B_bus^-1 on the reduced system, zero reference column.

    Solves ``B_red Z = B_f_red^T`` block by block (B_red is symmetric);
    no inverse is formed.
    """
    nb, nl = net.n_bus, net.n_branch
    out = np.zeros((nl, nb))
    if nb == 1 or nl == 0:
        return PtdfMatrix(out, net.ref_bus)
    fac = factor_b_bus_red(net) if factor is None else factor
    rhs_t = net.b_f_red.to_scipy().T.tocsc()
    keep = net.non_ref
    for lo in range(0, nl, PTDF_BLOCK):
        hi = min(lo + PTDF_BLOCK, nl)
        z = fac.solve(rhs_t[:, lo:hi].toarray())
        out[lo:hi, keep] = z.T
    return PtdfMatrix(out, net.ref_bus)


def branch_flows(net: DcNetwork, theta) -> np.ndarray:
    """Per-unit branch flows ``B_f theta`` from full or reduced angles."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] == net.n_bus:
        return net.b_f_full.matvec(theta)
    if theta.shape[0] == net.n_bus - 1:
        return net.b_f_red.matvec(theta)
    raise DimensionError(f"theta has {theta.shape[0]} entries; expected {net.n_bus} or {net.n_bus - 1}")


def solve_angles(net: DcNetwork, p_inj, factor=None) -> np.ndarray:
    """Full angle vector (theta_ref = 0) for per-unit injections summing to zero."""
    p_inj = np.asarray(p_inj, dtype=np.float64)
    theta = np.zeros(net.n_bus)
    if net.n_bus > 1:
        fac = factor_b_bus_red(net) if factor is None else factor
        theta[net.non_ref] = fac.solve(p_inj[net.non_ref])
    return theta


def gen_incidence(case: GridCase) -> CscMatrix:
    """``|B| x |G|`` map placing each in-service unit at its bus."""
    idx = case.bus_index
    gens = [g for g in case.generators if g.status]
    rows = [idx[g.bus] for g in gens]
    return CscMatrix.from_triplets(rows, np.arange(len(gens)), np.ones(len(gens)), len(case.buses), len(gens))


def bus_loads(case: GridCase) -> np.ndarray:
    return np.array([b.pd for b in case.buses], dtype=np.float64)


def reference_dispatch(case: GridCase) -> np.ndarray:
    """Bounds-feasible dispatch meeting total load: ``pmin + s (pmax - pmin)`` with one common ``s``."""
    gens = [g for g in case.generators if g.status]
    lo = np.array([g.pmin for g in gens])
    hi = np.array([g.pmax for g in gens])
    span = float(np.sum(hi - lo))
    need = case.total_load - float(np.sum(lo))
    if span <= 0 or need < -1e-9 or need > span + 1e-9:
        raise CaseError("total load lies outside the aggregate generation range")
    s = min(max(need / span, 0.0), 1.0)
    return lo + s * (hi - lo)


def impute_branch_limits(case: GridCase, margin: float = 1.2, floor_mw: float = 1.0,
                         only_missing: bool = True) -> GridCase:
    """Give unrated branches a MW limit from a reference operating point.

    The limit is ``ceil(margin * |f0|) + floor_mw`` where ``f0`` are the flows
    of :func:`reference_dispatch`.  That point stays feasible, while the
    optimum typically congests a few lines.  Used for cases such as case118
    and case300 that ship without branch ratings.
    """
    from .caseio.preprocess import remove_out_of_service

    case = remove_out_of_service(case)
    net = build_network(case)
    p0 = reference_dispatch(case)
    inj = gen_incidence(case).matvec(p0) - bus_loads(case)
    flows = compute_ptdf(net).flows(inj)
    branches = []
    k = 0
    for br in case.branches:
        f = flows[k]
        k += 1
        if only_missing and br.rate_a > 0:
            branches.append(br)
            continue
        rate = math.ceil(margin * abs(f)) + floor_mw
        branches.append(type(br)(br.from_bus, br.to_bus, br.x, float(rate), br.status))
    return case.replace(branches=branches)
