"""Solution recovery, branch-deletion outer approximations and nodal disaggregation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ContractError
from ..ipm.qp import OPTIMAL, IpmSolution
from ..network import DcNetwork
from .build import FormulationBundle, FormulationKind

#: a branch counts as binding when its margin is below this fraction of its rating (MW)
BINDING_TOL = 1e-5
STRATEGIES = ("random", "most_uncongested")


@dataclass(frozen=True, eq=False)
class DispatchResult:
    """Dispatch in MW per period; ``branch_duals`` in $/MWh (upper minus lower)."""

    objective: float
    p_g: np.ndarray  # (T, |G|)
    theta: np.ndarray | None  # (T, |B|) rad
    flows: np.ndarray  # (T, |L|)
    branch_duals: np.ndarray  # (T, |L|), zero on rows not present
    kind: FormulationKind
    status: str = OPTIMAL

    def margins(self, rate_a: np.ndarray) -> np.ndarray:
        """``min(f_max - f, f + f_max)`` per (period, branch)."""
        return rate_a[None, :] - np.abs(self.flows)


def recover(bundle: FormulationBundle, sol: IpmSolution, net: DcNetwork | None = None) -> DispatchResult:
    """Map an optimal QP solution back to generator outputs, angles, flows and prices."""
    if sol.status != OPTIMAL:
        raise ContractError(f"cannot recover a solution with status {sol.status}: {sol.message}".rstrip(": "))
    net = bundle.net if net is None else net
    qp, kind, case = bundle.qp, bundle.kind, bundle.case
    T, base = bundle.periods, bundle.case.base_mva
    x = sol.x
    gens = [g for g in case.generators if g.status]
    gbus = np.array([case.bus_index[g.bus] for g in gens], dtype=np.int64)
    nb, ng = net.n_bus, len(gens)
    theta = None
    if kind == FormulationKind.PURE_THETA:
        theta = x[qp.names.var_slice("theta")].reshape(T, nb)
        inj = np.stack([net.b_bus_full.matvec(theta[t]) for t in range(T)])
        p_g = base * inj[:, gbus] + bundle.loads[:, gbus]
    else:
        p_g = base * x[qp.names.var_slice("p_g")].reshape(T, ng)
        if kind == FormulationKind.MIXED:
            theta = x[qp.names.var_slice("theta")].reshape(T, nb)
    if theta is not None:
        flows = base * np.stack([net.b_f_full.matvec(theta[t]) for t in range(T)])
    else:
        ptdf = bundle.ptdf
        inj = np.zeros((T, nb))
        for t in range(T):
            np.add.at(inj[t], gbus, p_g[t])
        inj -= bundle.loads
        flows = np.stack([ptdf.flows(inj[t]) for t in range(T)])
    duals = np.zeros((T, net.n_branch))
    lam = sol.iterate.lam
    fb = bundle.flow_branches
    if len(fb):
        lo = lam[qp.names.ineq_slice("flow_lower")]
        hi = lam[qp.names.ineq_slice("flow_upper")]
        duals[fb[:, 0], fb[:, 1]] = (hi - lo) * bundle.cost_scale / base
    return DispatchResult(sol.objective, p_g, theta, flows, duals, kind, sol.status)


def _branch_margins(bundle: FormulationBundle, result: DispatchResult) -> tuple[np.ndarray, np.ndarray]:
    """Present limited branches and their worst-period margin (MW)."""
    present = np.unique(bundle.flow_branches[:, 1]) if len(bundle.flow_branches) else np.zeros(0, dtype=np.int64)
    marg = result.margins(bundle.net.rate_a)
    return present, marg[:, present].min(axis=0) if len(present) else np.zeros(0)


def binding_branches(bundle: FormulationBundle, result: DispatchResult) -> np.ndarray:
    present, margin = _branch_margins(bundle, result)
    rate = bundle.net.rate_a[present]
    return present[margin <= BINDING_TOL * np.maximum(rate, 1.0)]


def delete_branches(bundle: FormulationBundle, branches) -> FormulationBundle:
    """Drop the flow-limit row pairs of ``branches`` in every period."""
    drop = np.isin(bundle.flow_branches[:, 1], np.asarray(list(branches), dtype=np.int64))
    if not drop.any():
        return bundle
    names = bundle.qp.names
    keep = np.ones(bundle.qp.m, dtype=bool)
    for block in ("flow_lower", "flow_upper"):
        keep[np.arange(bundle.qp.m)[names.ineq_slice(block)][drop]] = False
    qp = bundle.qp.with_rows(np.flatnonzero(keep))
    out = replace(bundle, qp=qp, flow_branches=bundle.flow_branches[~drop])
    out.meta = {**bundle.meta, "deleted": sorted(set(bundle.meta.get("deleted", ())) | set(int(b) for b in branches))}
    return out


def outer_approximation(bundle: FormulationBundle, base_solution: DispatchResult, strategy: str,
                        ratio: float, seed: int = 0) -> FormulationBundle:
    """Relax ``bundle`` by deleting ``floor(ratio * |limited|)`` branch-limit pairs.

    ``random`` samples among branches not binding in ``base_solution``;
    ``most_uncongested`` deletes in order of decreasing margin.
    """
    if not 0.0 <= ratio <= 1.0 or math.isnan(ratio):
        raise ContractError(f"deletion ratio must lie in [0, 1], got {ratio}")
    if strategy not in STRATEGIES:
        raise ContractError(f"unknown strategy {strategy!r}; use {' or '.join(STRATEGIES)}")
    present, margin = _branch_margins(bundle, base_solution)
    k = int(math.floor(ratio * len(present) + 1e-12))
    if k == 0:
        return bundle
    if strategy == "random":
        rate = bundle.net.rate_a[present]
        free = present[margin > BINDING_TOL * np.maximum(rate, 1.0)]
        rng = np.random.default_rng(seed)
        chosen = rng.choice(free, size=min(k, len(free)), replace=False) if len(free) else []
    else:
        order = np.argsort(-margin, kind="stable")
        chosen = present[order[:k]]
    return delete_branches(bundle, chosen)


def disaggregate_nodal(p_b: float, gens, p_d: float = 0.0, tol: float = 1e-9) -> np.ndarray:
    """Split the bus output ``p_b + p_d`` over colocated units at equal marginal cost.

    Each unit follows ``clip((mu - b_i) / (2 a_i), pmin_i, pmax_i)``; the
    common ``mu`` is found exactly on the piecewise-linear supply curve.
    Linear-cost units (``a_i = 0``) share any step at ``mu = b_i`` in
    proportion to their ranges.
    """
    gens = list(gens)
    total = float(p_b) + float(p_d)
    lo = np.array([g.pmin for g in gens], dtype=np.float64)
    hi = np.array([g.pmax for g in gens], dtype=np.float64)
    a = np.array([g.a for g in gens], dtype=np.float64)
    b = np.array([g.b for g in gens], dtype=np.float64)
    if total < lo.sum() - tol or total > hi.sum() + tol:
        raise ContractError(f"bus output {total} MW outside the units' range [{lo.sum()}, {hi.sum()}]")
    if len(gens) == 1:
        return np.array([min(max(total, lo[0]), hi[0])])
    quad = a > 0

    def supply(mu: float, right: bool) -> np.ndarray:
        p = lo.copy()
        p[quad] = np.clip((mu - b[quad]) / (2 * a[quad]), lo[quad], hi[quad])
        lin = ~quad
        up = (b < mu) | ((b == mu) & right)
        p[lin & up] = hi[lin & up]
        return p

    knots = np.unique(np.concatenate([b[~quad], (b + 2 * a * lo)[quad], (b + 2 * a * hi)[quad]]))
    for i, mu in enumerate(knots):
        left, right = supply(mu, False), supply(mu, True)
        if total <= right.sum() + tol:
            if total >= left.sum() - tol:
                # at a kink or a linear unit's step: share the step by range
                gap = right - left
                share = 0.0 if gap.sum() <= 0 else (total - left.sum()) / gap.sum()
                return left + min(max(share, 0.0), 1.0) * gap
            break
        if i + 1 < len(knots) and total < supply(knots[i + 1], False).sum():
            free = quad & (b + 2 * a * lo <= mu) & (b + 2 * a * hi > mu)
            slope = float(np.sum(0.5 / a[free]))
            return supply(mu + (total - right.sum()) / slope, True)
    return supply(knots[0], False)
