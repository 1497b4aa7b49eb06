"""Structural checks on a grid case, reported as diagnostics rather than raised."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .model import BusType, GridCase

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: [{self.code}] {self.message}"


def bus_components(case: GridCase) -> list[list[int]]:
    """Connected components of the in-service branch graph, as external bus ids."""
    idx = case.bus_index
    n = len(case.buses)
    rows, cols = [], []
    for br in case.branches:
        if br.status and br.from_bus in idx and br.to_bus in idx:
            rows.append(idx[br.from_bus])
            cols.append(idx[br.to_bus])
    adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    comps = [[] for _ in range(ncomp)]
    for k, lab in enumerate(labels):
        comps[lab].append(case.buses[k].id)
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def validate(case: GridCase) -> list[Diagnostic]:
    """List violations of the grid-case invariants; empty when the case is usable.

    A missing reference bus is only a warning (one is designated later);
    negative reactances are warnings too, since series-compensated branches
    appear in real data and the reduced B_bus can stay positive definite.
    """
    out: list[Diagnostic] = []
    ids = [b.id for b in case.buses]
    seen: set[int] = set()
    dups = sorted({i for i in ids if i in seen or seen.add(i)})
    if dups:
        out.append(Diagnostic(ERROR, "duplicate-bus", f"duplicate bus ids {dups}"))
    known = set(ids)

    refs = [b.id for b in case.buses if b.bus_type == BusType.REF]
    if len(refs) > 1:
        out.append(Diagnostic(ERROR, "multiple-ref", f"multiple reference buses: {refs}"))
    elif not refs:
        out.append(Diagnostic(WARNING, "no-ref", "no reference bus; the lowest-id generator bus will be used"))

    for b in case.buses:
        if not math.isfinite(b.pd):
            out.append(Diagnostic(ERROR, "bad-load", f"bus {b.id} has non-finite load"))

    for k, br in enumerate(case.branches):
        tag = f"branch {k} ({br.from_bus}->{br.to_bus})"
        for end in (br.from_bus, br.to_bus):
            if end not in known:
                out.append(Diagnostic(ERROR, "unknown-bus", f"{tag} names unknown bus {end}"))
        if not br.status:
            continue
        if br.from_bus == br.to_bus:
            out.append(Diagnostic(ERROR, "self-loop", f"{tag} connects a bus to itself"))
        if not math.isfinite(br.x) or br.x == 0:
            out.append(Diagnostic(ERROR, "nonpositive-reactance", f"{tag} has reactance x={br.x}"))
        elif br.x < 0:
            out.append(Diagnostic(WARNING, "negative-reactance", f"{tag} has negative reactance x={br.x}"))
        if br.rate_a < 0:
            out.append(Diagnostic(ERROR, "negative-rating", f"{tag} has rate_a={br.rate_a}"))

    for k, g in enumerate(case.generators):
        tag = f"generator {k} at bus {g.bus}"
        if g.bus not in known:
            out.append(Diagnostic(ERROR, "unknown-bus", f"{tag} names an unknown bus"))
        if not g.status:
            continue
        if g.pmin > g.pmax:
            out.append(Diagnostic(ERROR, "bad-bounds", f"{tag} has pmin {g.pmin} > pmax {g.pmax}"))
        if g.a < 0:
            out.append(Diagnostic(ERROR, "nonconvex-cost", f"{tag} has negative quadratic cost {g.a}"))

    if case.buses and not dups:
        comps = bus_components(case)
        if len(comps) > 1:
            shown = "; ".join(str(c if len(c) <= 8 else c[:8] + ["..."]) for c in comps)
            out.append(Diagnostic(ERROR, "disconnected", f"network has {len(comps)} islands: {shown}"))
    return out


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == ERROR]
