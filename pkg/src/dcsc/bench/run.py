"""Benchmark orchestration: build, solve and measure every (case, formulation) pair."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields

from ..caseio import GridCase, errors, has_colocated, load_case, prepare, validate
from ..errors import CaseError
from ..formulations import (
    FormulationKind, ScedConfig, build_opf, build_sced, outer_approximation, recover,
)
from ..ipm import IpmOptions, solve_qp
from ..network import build_network, compute_ptdf, impute_branch_limits
from .report import BenchRow, SparsityReport, sparsity_report

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchConfig:
    ipm: IpmOptions = field(default_factory=IpmOptions)
    sced: ScedConfig = field(default_factory=ScedConfig)
    merge: bool = False
    ref_bus: int | None = None
    impute: str = "auto"  # auto: only cases without any rated branch; always; never


def load_prepared(source, merge: bool = False, ref_bus: int | None = None, impute: str = "auto") -> GridCase:
    """Parse, validate and preprocess a case; raise :class:`CaseError` on validation errors."""
    case = source if isinstance(source, GridCase) else load_case(str(source))
    bad = errors(validate(case))
    if bad:
        raise CaseError("; ".join(d.message for d in bad))
    case = prepare(case, ref_bus=ref_bus, merge=merge)
    if impute == "always" or (impute == "auto" and case.n_limited == 0):
        case = impute_branch_limits(case, only_missing=impute != "always")
    return case


def _row(report: SparsityReport, **extra) -> BenchRow:
    base = {f.name: getattr(report, f.name) for f in fields(SparsityReport)}
    return BenchRow(**base, **extra)


def _error_row(case_name: str, kind, mode: str, exc: Exception, ratio: float = 0.0) -> BenchRow:
    label = kind.label if isinstance(kind, FormulationKind) else str(kind)
    return BenchRow(kind=label, n_vars=0, n_cons=0, nnz_a=0, density_a=0.0, nnz_aat_lower=0,
                    factor_ops=0, case_name=case_name, status="Error", mode=mode, ratio=ratio,
                    error=f"{type(exc).__name__}: {exc}")


def run_benchmark(cases, kinds, mode: str = "opf", cfg: BenchConfig = BenchConfig()) -> list[BenchRow]:
    """One row per (case, kind); only the solver call is inside the solve timer."""
    kinds = [FormulationKind.parse(k) if not isinstance(k, FormulationKind) else k for k in kinds]
    if mode not in ("opf", "sced"):
        raise ValueError("mode must be opf or sced")
    rows: list[BenchRow] = []
    for source in cases:
        name = source.name if isinstance(source, GridCase) else str(source)
        try:
            merge = cfg.merge
            case = load_prepared(source, False, cfg.ref_bus, cfg.impute)
            if not merge and FormulationKind.PURE_THETA in kinds and has_colocated(case):
                log.warning("%s: merging colocated generators for all formulations", name)
                merge = True
            if merge:
                case = prepare(case, merge=True)
            net = build_network(case)
            ptdf = compute_ptdf(net) if FormulationKind.PTDF in kinds else None
        except Exception as exc:  # recorded, run continues
            rows.extend(_error_row(name, k, mode, exc) for k in kinds)
            continue
        for kind in kinds:
            try:
                t0 = time.perf_counter()
                if mode == "opf":
                    bundle = build_opf(case, net, ptdf, kind)
                else:
                    bundle = build_sced(case, net, ptdf, kind, cfg.sced)
                build_time = time.perf_counter() - t0
                rep = sparsity_report(bundle)
                t1 = time.perf_counter()
                sol = solve_qp(bundle.qp, cfg.ipm)
                solve_time = time.perf_counter() - t1
                rows.append(_row(rep, solve_time=solve_time, barrier_iterations=sol.iterations,
                                 objective=sol.objective, build_time=build_time, status=sol.status, mode=mode))
            except Exception as exc:
                rows.append(_error_row(name, kind, mode, exc))
    return rows


def run_outer_sweep(case, kinds, strategy: str, ratios, seed: int = 0,
                    cfg: BenchConfig = BenchConfig()) -> list[BenchRow]:
    """Rows for every (kind, ratio) after deleting branch limits from the full problem.

    Every kind uses the same deletions, ranked on the Mixed solution of the
    full problem.
    """
    kinds = [FormulationKind.parse(k) if not isinstance(k, FormulationKind) else k for k in kinds]
    case = load_prepared(case, cfg.merge, cfg.ref_bus, cfg.impute)
    net = build_network(case)
    ptdf = compute_ptdf(net) if FormulationKind.PTDF in kinds else None
    ref = build_opf(case, net, None, FormulationKind.MIXED)
    base_sol = solve_qp(ref.qp, cfg.ipm)
    base = recover(ref, base_sol)
    rows = []
    for kind in kinds:
        full = build_opf(case, net, ptdf, kind)
        for ratio in ratios:
            try:
                t0 = time.perf_counter()
                bundle = outer_approximation(full, base, strategy, ratio, seed)
                build_time = time.perf_counter() - t0
                rep = sparsity_report(bundle)
                t1 = time.perf_counter()
                sol = solve_qp(bundle.qp, cfg.ipm)
                solve_time = time.perf_counter() - t1
                rows.append(_row(rep, solve_time=solve_time, barrier_iterations=sol.iterations,
                                 objective=sol.objective, build_time=build_time, status=sol.status,
                                 mode=f"outer-{strategy}", ratio=float(ratio)))
            except Exception as exc:
                rows.append(_error_row(case.name, kind, f"outer-{strategy}", exc, float(ratio)))
    return rows
