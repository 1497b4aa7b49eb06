#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

For each case and formulation the OPF is solved once per backend after a
warm-up solve (which also triggers JIT compilation).  Objectives must agree
across backends; the script exits non-zero when they do not.

    python3 benchmarks/bench_backends.py case39 case118 --kinds ptdf,mixed --runs 3
    DCSC_BACKEND=numpy python3 -m pytest   # whole suite on the fallback
"""
from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

from dcsc import _accel
from dcsc.bench import load_prepared
from dcsc.formulations import FormulationKind, build_opf
from dcsc.ipm import solve_qp
from dcsc.network import build_network, compute_ptdf

BACKENDS = ("numba", "numpy")


def time_solve(qp, runs: int):
    sol = solve_qp(qp)  # warm-up
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        sol = solve_qp(qp)
        times.append(time.perf_counter() - t0)
    return sol, times


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("cases", nargs="*", default=["case39", "case118", "case300"])
    ap.add_argument("--kinds", default="ptdf,pure,mixed")
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1

    kinds = [FormulationKind.parse(k) for k in args.kinds.split(",") if k.strip()]
    results = []
    for name in args.cases:
        case = load_prepared(name, merge=FormulationKind.PURE_THETA in kinds)
        net = build_network(case)
        ptdf = compute_ptdf(net)
        for kind in kinds:
            qp = build_opf(case, net, ptdf, kind).qp
            row = {"case": name, "kind": kind.label}
            for be in BACKENDS:
                with _accel.use_backend(be):
                    sol, times = time_solve(qp, args.runs)
                row[f"{be}_s"] = statistics.median(times)
                row[f"{be}_obj"] = sol.objective
                row[f"{be}_iters"] = sol.iterations
            row["speedup"] = row["numpy_s"] / row["numba_s"]
            row["obj_rel_diff"] = abs(row["numba_obj"] - row["numpy_obj"]) / max(1.0, abs(row["numpy_obj"]))
            results.append(row)

    if args.json:
        print(json.dumps(results, indent=1))
    else:
        print(f"{'case':<16}{'kind':<11}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'iters':>7}{'obj diff':>10}")
        for r in results:
            print(f"{r['case']:<16}{r['kind']:<11}{r['numba_s']:>10.4f}{r['numpy_s']:>10.4f}"
                  f"{r['speedup']:>9.1f}{r['numba_iters']:>7d}{r['obj_rel_diff']:>10.1e}")
    return 0 if all(r["obj_rel_diff"] <= 1e-9 for r in results) else 2


if __name__ == "__main__":
    sys.exit(main())
