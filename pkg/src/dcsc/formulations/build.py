"""PTDF, pure-angle and mixed DC formulations of OPF and multi-period SCED.

Internally powers are per unit on ``base_mva`` and the objective is divided
by ``cost_scale`` (the largest marginal cost at pmax, in $/h per p.u.) so the
QP data are O(1).  :meth:`QuadraticProgram.objective` undoes the scaling.

Variables are block-major and period-major inside a block: Mixed uses
``x = [p_g(t=0..T-1), theta(t=0..T-1)]``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..caseio.model import GridCase
from ..errors import ContractError
from ..ipm.qp import QpNames, QuadraticProgram, _blocks
from ..network import DcNetwork, PtdfMatrix, bus_loads, compute_ptdf
from ..sparse import DROP_TOL, CscMatrix


class FormulationKind(str, enum.Enum):
    PTDF = "ptdf"
    PURE_THETA = "pure"
    MIXED = "mixed"

    @classmethod
    def parse(cls, text: str) -> "FormulationKind":
        aliases = {"ptdf": cls.PTDF, "pure": cls.PURE_THETA, "puretheta": cls.PURE_THETA,
                   "pure_theta": cls.PURE_THETA, "theta": cls.PURE_THETA, "mixed": cls.MIXED,
                   "btheta": cls.MIXED, "b-theta": cls.MIXED}
        key = str(text).lower()
        if key not in aliases:
            raise ValueError(f"unknown formulation {text!r}; use ptdf, pure or mixed")
        return aliases[key]

    @property
    def label(self) -> str:
        return {"ptdf": "Ptdf", "pure": "PureTheta", "mixed": "Mixed"}[self.value]


ALL_KINDS = (FormulationKind.PTDF, FormulationKind.PURE_THETA, FormulationKind.MIXED)


@dataclass(frozen=True)
class ScedConfig:
    periods: int = 24
    load_scale_range: tuple = (0.95, 1.05)
    seed: int = 0
    ramp_override: float | None = None  # MW/h for every unit
    ramp_frac: float = 0.3  # default ramp as a fraction of pmax per hour

    def __post_init__(self):
        lo, hi = self.load_scale_range
        if lo > hi:
            raise ValueError("load_scale_range low exceeds high")
        if self.periods < 1:
            raise ValueError("periods must be at least 1")


@dataclass(eq=False)
class FormulationBundle:
    """A built QP plus what is needed to map its solution back to the grid."""

    qp: QuadraticProgram
    kind: FormulationKind
    case: GridCase
    net: DcNetwork
    ptdf: PtdfMatrix | None
    periods: int
    loads: np.ndarray  # (T, |B|) MW
    scale_factors: np.ndarray  # (T, |B|)
    flow_branches: np.ndarray  # (rows, 2): (period, branch) of each flow_lower row
    ramps: np.ndarray  # (|G|,) MW/h, NaN when no ramp rows
    cost_scale: float
    meta: dict = field(default_factory=dict)

    @property
    def var_map(self) -> dict:
        return self.qp.names.var

    @property
    def n_gen(self) -> int:
        return sum(1 for g in self.case.generators if g.status)

    def counts(self) -> tuple[int, int]:
        """``(variables, constraints)`` with uncounted equality blocks left out."""
        names = self.qp.names
        eq = sum(sl.stop - sl.start for k, sl in names.eq.items() if k not in names.uncounted)
        return self.qp.n, self.qp.m + eq

    def counted_rows(self) -> CscMatrix:
        """Inequality rows stacked on the counted equality rows."""
        names = self.qp.names
        parts = [self.qp.A.to_scipy()]
        e = self.qp.E.to_scipy().tocsr()
        for k, sl in names.eq.items():
            if k not in names.uncounted:
                parts.append(e[sl])
        return CscMatrix.from_scipy(sp.vstack(parts, format="csc"))


# ---------------------------------------------------------------- helpers
def _gens(case: GridCase):
    return [g for g in case.generators if g.status]


def cost_scale(case: GridCase) -> float:
    gens = _gens(case)
    if not gens:
        return 1.0
    s = max(abs(2 * g.a * g.pmax + g.b) for g in gens) * case.base_mva
    return float(s) if s > 0 else 1.0


def nodal_cost(a: float, b: float, c: float, pd: float) -> tuple[float, float, float]:
    """Generator cost re-expressed in the net injection ``p_b = p_g - p_d``."""
    return a, b + 2 * a * pd, c + b * pd + a * pd * pd


def sample_loads(case: GridCase, cfg: ScedConfig) -> tuple[np.ndarray, np.ndarray]:
    """One uniform scale factor per (period, bus) from the seeded generator."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.load_scale_range
    scale = rng.uniform(lo, hi, size=(cfg.periods, len(case.buses)))
    return bus_loads(case)[None, :] * scale, scale


def _csc(m) -> CscMatrix:
    return CscMatrix.from_scipy(sp.csc_matrix(m)).compress(DROP_TOL)


def _kron(T: int, m) -> sp.csc_matrix:
    return sp.kron(sp.identity(T, format="csc"), sp.csc_matrix(m), format="csc")


def _diff_rows(T: int, n: int) -> sp.csc_matrix:
    """Rows ``x_t - x_{t-1}`` for t = 1..T-1 on period-major stacked vectors."""
    if T < 2:
        return sp.csc_matrix((0, T * n))
    d = sp.diags([np.ones(T - 1), -np.ones(T - 1)], [1, 0], shape=(T - 1, T))
    return sp.kron(d, sp.identity(n), format="csc")


# ---------------------------------------------------------------- builder
def build_problem(case: GridCase, net: DcNetwork, ptdf: PtdfMatrix | None, kind,
                  loads: np.ndarray, ramps: np.ndarray | None = None) -> FormulationBundle:
    """Assemble the QP for ``loads`` (T x |B| MW); ramp rows when ``ramps`` is given and T > 1."""
    kind = FormulationKind.parse(kind) if not isinstance(kind, FormulationKind) else kind
    loads = np.atleast_2d(np.asarray(loads, dtype=np.float64))
    T, nb = loads.shape
    if nb != net.n_bus:
        raise ContractError("load profile does not match the network")
    gens = _gens(case)
    ng = len(gens)
    if ng == 0:
        raise ContractError("case has no in-service generator")
    base = case.base_mva
    s = cost_scale(case)
    idx = case.bus_index
    gbus = np.array([idx[g.bus] for g in gens], dtype=np.int64)
    a = np.array([g.a for g in gens])
    b = np.array([g.b for g in gens])
    c0 = np.array([g.c for g in gens])
    pmin = np.array([g.pmin for g in gens]) / base
    pmax = np.array([g.pmax for g in gens]) / base
    pd = loads / base  # (T, nb) p.u.
    lim = net.limited
    nl = len(lim)
    fmax = np.tile(net.rate_a[lim] / base, T)
    flow_branches = np.column_stack([np.repeat(np.arange(T), nl), np.tile(lim, T)]) if nl else np.zeros((0, 2), dtype=np.int64)
    use_ramp = ramps is not None and T > 1
    ramp_pu = np.tile(np.asarray(ramps, dtype=np.float64) / base, T - 1) if use_ramp else np.zeros(0)
    cg = sp.csc_matrix((np.ones(ng), (gbus, np.arange(ng))), shape=(nb, ng))

    ineq: list[tuple[str, sp.spmatrix, np.ndarray]] = []
    eq: list[tuple[str, sp.spmatrix, np.ndarray]] = []
    uncounted = set()

    if kind == FormulationKind.PTDF:
        if ptdf is None:
            ptdf = compute_ptdf(net)
        n = T * ng
        h_flow = ptdf.data[lim] @ cg.toarray() if nl else np.zeros((0, ng))
        h_flow[np.abs(h_flow) < DROP_TOL] = 0.0
        shift = (ptdf.data[lim] @ pd.T).T.ravel() if nl else np.zeros(0)  # PTDF p_d per period
        hf = _kron(T, h_flow)
        ineq += [("flow_lower", hf, -fmax + shift), ("flow_upper", -hf, -fmax - shift)]
        ineq += [("gen_lower", sp.identity(n, format="csc"), np.tile(pmin, T)),
                 ("gen_upper", -sp.identity(n, format="csc"), -np.tile(pmax, T))]
        if use_ramp:
            dr = _diff_rows(T, ng)
            ineq += [("ramp_up", -dr, -ramp_pu), ("ramp_down", dr, -ramp_pu)]
        eq.append(("balance", _kron(T, np.ones((1, ng))), pd.sum(axis=1)))
        uncounted.add("balance")
        G = sp.diags(np.tile(2 * a * base * base / s, T))
        cvec = np.tile(b * base / s, T)
        offset = T * c0.sum() / s
        var = [("p_g", n)]

    elif kind == FormulationKind.PURE_THETA:
        if len(set(gbus.tolist())) != ng:
            raise ContractError("pure angle formulation needs at most one generator per bus; merge colocated generators first")
        n = T * nb
        bbus = net.b_bus_full.to_scipy()
        bf = net.b_f_full.to_scipy().tocsr()[lim]
        has_gen = np.zeros(nb, dtype=bool)
        has_gen[gbus] = True
        an = np.zeros(nb)
        an[gbus] = a
        # nodal coefficients per period (p.u. injection)
        lo = np.empty((T, nb))
        hi = np.empty((T, nb))
        bn = np.zeros((T, nb))
        offset = 0.0
        for t in range(T):
            lo[t] = -pd[t]
            hi[t] = -pd[t]
            lo[t, gbus] = pmin - pd[t, gbus]
            hi[t, gbus] = pmax - pd[t, gbus]
            pd_mw = loads[t, gbus]
            ab, bb, cb = nodal_cost(a, b, c0, pd_mw)
            bn[t, gbus] = bb
            offset += float(np.sum(cb)) / s
        bflow = _kron(T, bf)
        bb_all = _kron(T, bbus)
        ineq += [("flow_lower", bflow, -fmax), ("flow_upper", -bflow, -fmax),
                 ("bus_lower", bb_all, lo.ravel()), ("bus_upper", -bb_all, -hi.ravel())]
        if use_ramp:
            # p_g,t - p_g,t-1 = B_b (theta_t - theta_t-1) + (pd_t - pd_t-1) at generator buses
            sel = sp.csc_matrix((np.ones(ng), (np.arange(ng), gbus)), shape=(ng, nb))
            dr = _diff_rows(T, nb)
            rows = _kron(T - 1, sel @ bbus) @ dr
            dpd = (pd[1:, gbus] - pd[:-1, gbus]).ravel()
            ineq += [("ramp_up", -rows, -ramp_pu + dpd), ("ramp_down", rows, -ramp_pu - dpd)]
        gauge = sp.csc_matrix((np.ones(T), (np.arange(T), np.arange(T) * nb + net.ref_bus)), shape=(T, n))
        eq.append(("gauge", gauge, np.zeros(T)))
        uncounted.add("gauge")
        wa = sp.diags(np.tile(2 * an * base * base / s, T))
        G = bb_all.T @ wa @ bb_all
        cvec = bb_all.T @ (bn.ravel() * base / s)
        var = [("theta", n)]

    elif kind == FormulationKind.MIXED:
        n = T * (ng + nb)
        bf = net.b_f_full.to_scipy().tocsr()[lim]
        zg = sp.csc_matrix((T * nl, T * ng))
        bflow = sp.hstack([zg, _kron(T, bf)], format="csc")
        ig = sp.hstack([sp.identity(T * ng), sp.csc_matrix((T * ng, T * nb))], format="csc")
        ineq += [("flow_lower", bflow, -fmax), ("flow_upper", -bflow, -fmax),
                 ("gen_lower", ig, np.tile(pmin, T)), ("gen_upper", -ig, -np.tile(pmax, T))]
        if use_ramp:
            dr = sp.hstack([_diff_rows(T, ng), sp.csc_matrix(((T - 1) * ng, T * nb))], format="csc")
            ineq += [("ramp_up", -dr, -ramp_pu), ("ramp_down", dr, -ramp_pu)]
        bal = sp.hstack([_kron(T, cg), -_kron(T, net.b_bus_full.to_scipy())], format="csc")
        eq.append(("balance", bal, pd.ravel()))
        gauge = sp.csc_matrix((np.ones(T), (np.arange(T), T * ng + np.arange(T) * nb + net.ref_bus)), shape=(T, n))
        eq.append(("gauge", gauge, np.zeros(T)))
        uncounted.add("gauge")
        G = sp.block_diag([sp.diags(np.tile(2 * a * base * base / s, T)), sp.csc_matrix((T * nb, T * nb))], format="csc")
        cvec = np.concatenate([np.tile(b * base / s, T), np.zeros(T * nb)])
        offset = T * c0.sum() / s
        var = [("p_g", T * ng), ("theta", T * nb)]
    else:  # pragma: no cover
        raise ContractError(f"unknown formulation {kind}")

    A = sp.vstack([m for _, m, _ in ineq], format="csc") if ineq else sp.csc_matrix((0, n))
    bvec = np.concatenate([r for _, _, r in ineq]) if ineq else np.zeros(0)
    E = sp.vstack([m for _, m, _ in eq], format="csc") if eq else sp.csc_matrix((0, n))
    hvec = np.concatenate([r for _, _, r in eq]) if eq else np.zeros(0)
    names = QpNames(
        var=_blocks(var),
        ineq=_blocks([(k, m.shape[0]) for k, m, _ in ineq]),
        eq=_blocks([(k, m.shape[0]) for k, m, _ in eq]),
        uncounted=frozenset(uncounted))
    qp = QuadraticProgram(
        G=_csc(G), c=np.asarray(cvec, dtype=np.float64).ravel(), A=_csc(A), b=bvec,
        E=_csc(E), h=hvec, names=names, offset=float(offset), obj_scale=s)
    return FormulationBundle(
        qp=qp, kind=kind, case=case, net=net, ptdf=ptdf, periods=T, loads=loads,
        scale_factors=np.ones_like(loads), flow_branches=np.asarray(flow_branches, dtype=np.int64),
        ramps=np.asarray(ramps, dtype=np.float64) if use_ramp else np.full(ng, np.nan),
        cost_scale=s)


def build_opf(case: GridCase, net: DcNetwork, ptdf: PtdfMatrix | None, kind) -> FormulationBundle:
    """Single-period OPF in the requested formulation (PTDF computed when omitted)."""
    return build_problem(case, net, ptdf, kind, bus_loads(case)[None, :])


def build_sced(case: GridCase, net: DcNetwork, ptdf: PtdfMatrix | None, kind, cfg: ScedConfig = ScedConfig(),
               load_profile=None) -> FormulationBundle:
    """Multi-period dispatch coupled by ramp limits ``|p_t - p_{t-1}| <= ramp``.

    Bus loads are scaled per (period, bus) from ``cfg``; ``load_profile``
    (T x |B| MW) overrides the sampling.
    """
    if load_profile is not None:
        loads = np.atleast_2d(np.asarray(load_profile, dtype=np.float64))
        scale = np.divide(loads, bus_loads(case)[None, :], out=np.ones_like(loads),
                          where=bus_loads(case)[None, :] != 0)
    else:
        loads, scale = sample_loads(case, cfg)
    gens = _gens(case)
    if cfg.ramp_override is not None:
        ramps = np.full(len(gens), float(cfg.ramp_override))
    else:
        ramps = np.array([g.ramp_or(cfg.ramp_frac) for g in gens])
    bundle = build_problem(case, net, ptdf, kind, loads, ramps)
    bundle.scale_factors = scale
    return bundle
