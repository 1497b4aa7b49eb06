"""Reader for the numeric subset of MATPOWER case files, plus a JSON mirror."""
from __future__ import annotations

import json
import math
import re

import numpy as np

from ..errors import ParseError
from .model import Branch, Bus, BusType, Generator, GridCase

REQUIRED = ("baseMVA", "bus", "gen", "branch", "gencost")

# zero-based MATPOWER column positions
BUS_I, BUS_TYPE, PD = 0, 1, 2
F_BUS, T_BUS, BR_X, RATE_A, BR_STATUS = 0, 1, 3, 5, 10
GEN_BUS, GEN_STATUS, PMAX, PMIN, RAMP_30 = 0, 7, 8, 9, 18
MODEL, NCOST, COST = 0, 3, 4
POLYNOMIAL = 2

_ASSIGN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    # '%' inside a quoted string is rare enough in case files to ignore
    k = line.find("%")
    return line if k < 0 else line[:k]


def _tokens(text: str, lineno: int) -> list[float]:
    out = []
    for tok in text.replace(",", " ").split():
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(f"non-numeric token {tok!r}", lineno) from None
    return out


def _read_blocks(text: str) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    """Collect ``mpc.name = ...`` numeric assignments.

    Returns the matrices and the line on which each block starts.  Cell arrays
    and strings (bus names, version) are skipped.
    """
    lines = text.splitlines()
    blocks: dict[str, np.ndarray] = {}
    where: dict[str, int] = {}
    i = 0
    while i < len(lines):
        m = _ASSIGN.match(_strip_comment(lines[i]))
        i += 1
        if not m:
            continue
        name, rest = m.group(1), m.group(2).strip()
        start = i
        if rest.startswith("{"):
            while "}" not in _strip_comment(rest) and i < len(lines):
                rest = lines[i]
                i += 1
            continue
        if not rest.startswith("["):
            value = rest.rstrip(";").strip()
            if value.startswith("'") or value.startswith('"'):
                continue
            vals = _tokens(value, start)
            if len(vals) != 1:
                raise ParseError(f"expected a scalar for mpc.{name}", start)
            blocks[name] = np.array([[vals[0]]])
            where[name] = start
            continue
        # matrix: rows end at ';' or newline, block ends at ']'
        rows: list[tuple[int, list[float]]] = []
        body = rest[1:]
        lineno = start
        closed = False
        while True:
            seg = _strip_comment(body)
            if "]" in seg:
                seg = seg[:seg.index("]")]
                closed = True
            for piece in seg.split(";"):
                vals = _tokens(piece, lineno)
                if vals:
                    rows.append((lineno, vals))
            if closed or i >= len(lines):
                break
            body = lines[i]
            i += 1
            lineno = i
        if not closed:
            raise ParseError(f"unterminated matrix mpc.{name}", start)
        if rows:
            width = len(rows[0][1])
            for ln, r in rows:
                if len(r) != width:
                    raise ParseError(f"ragged row in mpc.{name}: {len(r)} columns, expected {width}", ln)
            blocks[name] = np.array([r for _, r in rows], dtype=np.float64)
        else:
            blocks[name] = np.zeros((0, 0))
        where[name] = start
    return blocks, where


def _need_cols(mat: np.ndarray, ncols: int, name: str, line: int) -> None:
    if len(mat) and mat.shape[1] < ncols:
        raise ParseError(f"mpc.{name} needs at least {ncols} columns, found {mat.shape[1]}", line)


def parse_matpower(text: str, name: str = "") -> GridCase:
    """Parse MATPOWER case text into a :class:`GridCase`.

    Only polynomial gencost rows with up to three coefficients are accepted.
    The 30-minute ramp column, when present and positive, is doubled to MW/h.
    """
    blocks, where = _read_blocks(text)
    missing = [b for b in REQUIRED if b not in blocks]
    if missing:
        raise ParseError("missing block(s): " + ", ".join("mpc." + m for m in missing))

    base_mva = float(blocks["baseMVA"].ravel()[0])
    bus, gen, branch, gencost = (blocks[k] for k in ("bus", "gen", "branch", "gencost"))
    _need_cols(bus, 3, "bus", where["bus"])
    _need_cols(branch, 11, "branch", where["branch"])
    _need_cols(gen, 10, "gen", where["gen"])
    _need_cols(gencost, 4, "gencost", where["gencost"])

    buses = []
    for k, row in enumerate(bus):
        try:
            bt = BusType(int(row[BUS_TYPE]))
        except ValueError:
            raise ParseError(f"unknown bus type {row[BUS_TYPE]:g}", where["bus"] + k) from None
        buses.append(Bus(int(row[BUS_I]), bt, float(row[PD])))

    branches = [
        Branch(int(r[F_BUS]), int(r[T_BUS]), float(r[BR_X]), float(r[RATE_A]), bool(r[BR_STATUS] > 0))
        for r in branch
    ]

    if len(gencost) < len(gen):
        raise ParseError(f"mpc.gencost has {len(gencost)} rows for {len(gen)} generators", where["gencost"])
    gens = []
    for k, (g, cst) in enumerate(zip(gen, gencost)):
        line = where["gencost"] + k
        if int(cst[MODEL]) != POLYNOMIAL:
            raise ParseError("unsupported cost model (only polynomial gencost is accepted)", line)
        n = int(cst[NCOST])
        coef = list(cst[COST:COST + n])
        if len(coef) != n:
            raise ParseError(f"gencost row declares {n} coefficients but has {len(coef)}", line)
        if n > 3:
            if any(v != 0 for v in coef[:n - 3]):
                raise ParseError(f"polynomial cost of degree {n - 1} is not quadratic", line)
            coef = coef[n - 3:]
        coef = [0.0] * (3 - len(coef)) + coef
        ramp = None
        if len(g) > RAMP_30 and g[RAMP_30] > 0:
            ramp = 2.0 * float(g[RAMP_30])
        gens.append(Generator(
            bus=int(g[GEN_BUS]), pmin=float(g[PMIN]), pmax=float(g[PMAX]),
            cost=(float(coef[0]), float(coef[1]), float(coef[2])), ramp=ramp,
            status=bool(g[GEN_STATUS] > 0)))
    return GridCase(base_mva, buses, branches, gens, name=name)


# ---------------------------------------------------------------- JSON mirror
def _gen_dict(g: Generator) -> dict:
    d = {"bus": g.bus, "pmin": g.pmin, "pmax": g.pmax, "cost": list(g.cost),
         "ramp": g.ramp, "status": g.status}
    if g.merged_from:
        d["merged_from"] = [_gen_dict(m) for m in g.merged_from]
    return d


def case_to_dict(case: GridCase) -> dict:
    return {
        "name": case.name,
        "base_mva": case.base_mva,
        "buses": [{"id": b.id, "bus_type": b.bus_type.name, "pd": b.pd} for b in case.buses],
        "branches": [{"from_bus": br.from_bus, "to_bus": br.to_bus, "x": br.x,
                      "rate_a": br.rate_a, "status": br.status} for br in case.branches],
        "generators": [_gen_dict(g) for g in case.generators],
    }


def emit_json(case: GridCase, indent: int | None = 1) -> str:
    # repr-exact floats, so the mirror round-trips bit for bit
    return json.dumps(case_to_dict(case), indent=indent)


def _num(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{what} must be a number, got {v!r}")
    return float(v)


def _gen_from(d: dict) -> Generator:
    cost = d["cost"]
    if len(cost) != 3:
        raise ParseError("generator cost must have three coefficients")
    ramp = d.get("ramp")
    return Generator(
        bus=int(d["bus"]), pmin=_num(d["pmin"], "pmin"), pmax=_num(d["pmax"], "pmax"),
        cost=tuple(_num(c, "cost") for c in cost),
        ramp=None if ramp is None else _num(ramp, "ramp"),
        status=bool(d.get("status", True)),
        merged_from=tuple(_gen_from(m) for m in d.get("merged_from", ())))


def case_from_dict(d: dict) -> GridCase:
    try:
        buses = [Bus(int(b["id"]), BusType[b["bus_type"]] if isinstance(b["bus_type"], str)
                     else BusType(int(b["bus_type"])), _num(b["pd"], "pd")) for b in d["buses"]]
        branches = [Branch(int(r["from_bus"]), int(r["to_bus"]), _num(r["x"], "x"),
                           _num(r.get("rate_a", 0.0), "rate_a"), bool(r.get("status", True)))
                    for r in d["branches"]]
        gens = [_gen_from(g) for g in d["generators"]]
        return GridCase(_num(d["base_mva"], "base_mva"), buses, branches, gens, name=d.get("name", ""))
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r} in JSON case") from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_json(text: str) -> GridCase:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(d, dict):
        raise ParseError("JSON case must be an object")
    return case_from_dict(d)


def parse_case(text: str, name: str = "") -> GridCase:
    """Dispatch on content: JSON objects start with ``{``."""
    if text.lstrip().startswith("{"):
        case = parse_json(text)
        return case.replace(name=case.name or name)
    return parse_matpower(text, name=name)


def is_finite_case(case: GridCase) -> bool:
    vals = [b.pd for b in case.buses] + [br.x for br in case.branches]
    vals += [v for g in case.generators for v in (g.pmin, g.pmax, *g.cost)]
    return all(math.isfinite(v) for v in vals)
