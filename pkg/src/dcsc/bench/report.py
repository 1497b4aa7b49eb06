"""Sparsity statistics of formulation constraint matrices and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..formulations import FormulationBundle, FormulationKind
from ..sparse import DROP_TOL, CscMatrix, analyze

FORMATS = ("csv", "json", "markdown")
TIMING_FIELDS = ("solve_time", "build_time")


@dataclass(frozen=True)
class SparsityReport:
    """Counts of the constraint matrix ``A`` (inequality rows plus counted equalities).

    ``n_cons_compact`` counts each two-sided pair of rows (flow, bound, fixed
    injection) once, the other convention the formulation tables may use.
    """

    kind: str
    n_vars: int
    n_cons: int
    nnz_a: int
    density_a: float
    nnz_aat_lower: int
    factor_ops: int
    case_name: str
    n_cons_compact: int = 0


@dataclass(frozen=True)
class BenchRow(SparsityReport):
    solve_time: float = math.nan
    barrier_iterations: int = 0
    objective: float = math.nan
    build_time: float = math.nan
    status: str = ""
    mode: str = "opf"
    ratio: float = 0.0
    error: str = ""


def pattern_of(a) -> sp.csc_matrix:
    m = a.to_scipy() if isinstance(a, CscMatrix) else sp.csc_matrix(a)
    m = m.copy()
    m.data = np.ones_like(m.data)
    return m


def aat_lower(a) -> sp.csc_matrix:
    """Lower triangle (with diagonal) of the structural pattern of ``A A'``."""
    p = pattern_of(a)
    prod = (p @ p.T).tocsc()
    prod.data = np.ones_like(prod.data)
    return sp.tril(prod, format="csc")


def _compact_rows(bundle: FormulationBundle) -> int:
    names = bundle.qp.names
    pairs = 0
    for lo, hi in (("flow_lower", "flow_upper"), ("gen_lower", "gen_upper"),
                   ("bus_lower", "bus_upper"), ("ramp_up", "ramp_down")):
        if lo in names.ineq and hi in names.ineq:
            pairs += names.ineq[lo].stop - names.ineq[lo].start
    return bundle.counts()[1] - pairs


def matrix_report(a, kind: str = "", case_name: str = "", n_cons_compact: int | None = None) -> SparsityReport:
    a = a if isinstance(a, CscMatrix) else CscMatrix.from_scipy(sp.csc_matrix(a))
    a = a.compress(DROP_TOL)
    m, n = a.shape
    low = aat_lower(a)
    if m:
        sym = analyze(CscMatrix.from_scipy(low + sp.triu(low.T, 1)))
        ops = int(sym.factor_ops)
    else:
        ops = 0
    return SparsityReport(
        kind=kind, n_vars=n, n_cons=m, nnz_a=a.nnz,
        density_a=a.nnz / (n * m) if n and m else 0.0,
        nnz_aat_lower=int(low.nnz), factor_ops=ops, case_name=case_name,
        n_cons_compact=m if n_cons_compact is None else n_cons_compact)


def sparsity_report(bundle: FormulationBundle) -> SparsityReport:
    kind = bundle.kind.label if isinstance(bundle.kind, FormulationKind) else str(bundle.kind)
    return matrix_report(bundle.counted_rows(), kind, bundle.case.name or "", _compact_rows(bundle))


# ---------------------------------------------------------------- export
def _columns(rows, include_timing: bool) -> list[str]:
    cls = type(rows[0]) if rows else BenchRow
    names = [f.name for f in fields(cls)]
    return names if include_timing else [c for c in names if c not in TIMING_FIELDS]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def render(report, fmt: str = "csv", include_timing: bool = True, row_type=None) -> str:
    """Text form of a list of report rows; ``include_timing=False`` gives byte-stable output."""
    rows = list(report)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; use one of {', '.join(FORMATS)}")
    cols = _columns(rows, include_timing) if rows or row_type is None else \
        [f.name for f in fields(row_type) if include_timing or f.name not in TIMING_FIELDS]
    if fmt == "json":
        data = [{c: _jsonable(getattr(r, c)) for c in cols} for r in rows]
        return json.dumps({"columns": cols, "rows": data}, indent=1) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in cols])
        return buf.getvalue()
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        lines.append("| " + " | ".join(_fmt(getattr(r, c)) for c in cols) + " |")
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def export(report, fmt: str, path, include_timing: bool = True) -> Path:
    path = Path(path)
    text = render(report, fmt, include_timing)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def load_report(path, fmt: str | None = None) -> list:
    """Read back a CSV or JSON report as :class:`BenchRow` or :class:`SparsityReport` rows."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        doc = json.loads(path.read_text())
        records = doc["rows"]
    elif fmt == "csv":
        records = list(csv.DictReader(io.StringIO(path.read_text())))
    else:
        raise ValueError("only csv and json reports can be read back")
    out = []
    for rec in records:
        cls = BenchRow if set(rec) - {f.name for f in fields(SparsityReport)} else SparsityReport
        kw = {}
        for f in fields(cls):
            if f.name not in rec:
                continue
            v = rec[f.name]
            kw[f.name] = _coerce(f.type, v)
        out.append(cls(**kw))
    return out


def _coerce(typ, v):
    typ = typ if isinstance(typ, str) else getattr(typ, "__name__", str(typ))
    if typ == "int":
        return int(v)
    if typ == "float":
        return float(v)
    return str(v)


def spy_lines(bundle_or_matrix) -> list[str]:
    a = bundle_or_matrix.counted_rows() if isinstance(bundle_or_matrix, FormulationBundle) else bundle_or_matrix
    a = (a if isinstance(a, CscMatrix) else CscMatrix.from_scipy(sp.csc_matrix(a))).compress(DROP_TOL)
    r, c, _ = a.triplets()
    order = np.lexsort((c, r))
    return [f"{int(r[k])},{int(c[k])}" for k in order]


def spy_export(bundle, path) -> Path:
    """Zero-based ``row,col`` coordinates of the structural nonzeros of ``A``, sorted."""
    path = Path(path)
    lines = spy_lines(bundle)
    with open(path, "w", newline="\n") as fh:
        fh.write("".join(line + "\n" for line in lines))
    return path


def as_dict(row) -> dict:
    return asdict(row)
