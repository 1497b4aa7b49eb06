"""Case preprocessing: out-of-service removal, reference bus, generator merging."""
from __future__ import annotations

import logging
from collections import OrderedDict

from ..errors import CaseError, MergeError
from .model import BusType, Generator, GridCase

log = logging.getLogger(__name__)


def remove_out_of_service(case: GridCase) -> GridCase:
    """Drop isolated buses and every out-of-service branch or generator.

    Branches and generators attached to an isolated (type 4) bus go too.
    """
    dead = {b.id for b in case.buses if b.bus_type == BusType.ISOLATED}
    buses = [b for b in case.buses if b.id not in dead]
    branches = [br for br in case.branches
                if br.status and br.from_bus not in dead and br.to_bus not in dead]
    gens = [g for g in case.generators if g.status and g.bus not in dead]
    return case.replace(buses=buses, branches=branches, generators=gens)


def reference_bus(case: GridCase) -> int:
    """External id of the reference bus.

    The unique type-3 bus; failing that, the lowest-id bus with an in-service
    generator (logged as a warning).
    """
    refs = [b.id for b in case.buses if b.bus_type == BusType.REF]
    if len(refs) > 1:
        raise CaseError(f"multiple reference buses: {refs}")
    if refs:
        return refs[0]
    known = set(case.bus_ids)
    hosts = sorted({g.bus for g in case.generators if g.status and g.bus in known})
    if not hosts:
        raise CaseError("no reference bus and no generator bus to designate")
    log.warning("no reference bus in case %r; using bus %d", case.name, hosts[0])
    return hosts[0]


def with_reference(case: GridCase, bus_id: int | None = None) -> GridCase:
    """Make ``bus_id`` (default: :func:`reference_bus`) the only REF bus."""
    ref = reference_bus(case) if bus_id is None else int(bus_id)
    if ref not in set(case.bus_ids):
        raise CaseError(f"reference bus {ref} does not exist")
    buses = []
    for b in case.buses:
        if b.id == ref:
            b = type(b)(b.id, BusType.REF, b.pd)
        elif b.bus_type == BusType.REF:
            b = type(b)(b.id, BusType.PV, b.pd)
        buses.append(b)
    return case.replace(buses=buses)


def merged_cost(gens) -> tuple[float, float, float]:
    """Aggregate quadratic of colocated units dispatched at equal marginal cost.

    With every member interior, ``min sum a_i p_i^2 + b_i p_i + c_i`` subject to
    ``sum p_i = P`` is the quadratic below.  The constant carries the
    dispersion of the members' marginal costs, so the aggregate equals the
    true minimum over splits rather than upper-bounding it.
    """
    inv = sum(1.0 / g.a for g in gens)
    a = 1.0 / inv
    sb = sum(g.b / g.a for g in gens)
    b = a * sb
    c = sum(g.c for g in gens) - 0.25 * (sum(g.b * g.b / g.a for g in gens) - sb * sb / inv)
    return a, b, c


def merge_colocated_generators(case: GridCase) -> GridCase:
    """Replace the in-service units at each bus by one aggregate unit.

    Out-of-service units are dropped.  Buses with a single unit keep it as is,
    which makes the operation idempotent.  Members with a linear cost
    (``a == 0``) have no interior equal-marginal split and are refused.
    """
    groups: OrderedDict[int, list[Generator]] = OrderedDict()
    for g in case.generators:
        if g.status:
            groups.setdefault(g.bus, []).append(g)
    gens = []
    for bus, members in groups.items():
        if len(members) == 1:
            gens.append(members[0])
            continue
        flat = []
        for m in members:
            flat.extend(m.merged_from or (m,))
        if any(m.a <= 0 for m in flat):
            raise MergeError(f"cannot merge generators at bus {bus}: a member has a linear cost (a = 0)")
        ramp = None
        if any(m.ramp is not None for m in flat):
            ramp = sum(m.ramp_or() for m in flat)
        gens.append(Generator(
            bus=bus,
            pmin=sum(m.pmin for m in flat),
            pmax=sum(m.pmax for m in flat),
            cost=merged_cost(flat),
            ramp=ramp,
            status=True,
            merged_from=tuple(flat)))
    return case.replace(generators=gens)


def has_colocated(case: GridCase) -> bool:
    buses = [g.bus for g in case.generators if g.status]
    return len(buses) != len(set(buses))


def prepare(case: GridCase, ref_bus: int | None = None, merge: bool = False) -> GridCase:
    """Standard pipeline: drop out-of-service elements, fix the reference, optionally merge."""
    case = remove_out_of_service(case)
    case = with_reference(case, ref_bus)
    if merge:
        case = merge_colocated_generators(case)
    return case
