"""Command-line interface: ``dcsc {parse,ptdf,opf,sced,report,outer,bench}``.

Exit codes: 0 success, 1 usage error, 2 parse or validation error, 3 solve failure.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    BenchConfig, export, load_prepared, render, run_benchmark, run_outer_sweep, sparsity_report, spy_export,
)
from .caseio import emit_json, load_case, validate
from .errors import CaseError, ParseError
from .formulations import ALL_KINDS, FormulationKind, ScedConfig, build_opf, build_sced, recover
from .ipm import IpmOptions, solve_qp
from .network import build_network, compute_ptdf

EXIT_OK, EXIT_USAGE, EXIT_CASE, EXIT_SOLVE = 0, 1, 2, 3

log = logging.getLogger("dcsc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--format", choices=("csv", "json", "markdown"), default=None, help="output format")
    g.add_argument("--seed", type=int, default=0, help="seed for load sampling and random deletions")
    g.add_argument("--ref-bus", type=int, default=None, help="reference bus id (default: the case's type-3 bus)")
    g.add_argument("--merge-gens", action="store_true", help="merge generators sharing a bus")
    g.add_argument("--ramp-frac", type=float, default=0.3, help="default ramp limit as a fraction of pmax per hour")
    g.add_argument("--path", choices=("normal", "augmented", "auto"), default="auto", help="IPM linear algebra")
    g.add_argument("--tol", type=float, default=1e-8)
    g.add_argument("--max-iter", type=int, default=100)
    g.add_argument("--impute", choices=("auto", "always", "never"), default="auto",
                   help="impute MW limits for unrated branches (auto: when a case has none)")
    g.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")
    g.add_argument("--trace", default=None, help="write the IPM iteration trace as JSON lines")
    g.add_argument("--no-timing", action="store_true", help="omit wall-clock columns (byte-stable reports)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = _Parser(prog="dcsc", description="DC OPF/SCED formulations solved by a sparse interior-point method")
    p.add_argument("--version", action="version", version=f"dcsc {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("parse", parents=[common], help="parse and validate a case")
    s.add_argument("case")
    s.add_argument("--emit-json", default=None, help="also write the case as JSON")

    s = sub.add_parser("ptdf", parents=[common], help="compute the PTDF matrix")
    s.add_argument("case")

    for name, helptext in (("opf", "solve single-period OPF"), ("sced", "solve multi-period SCED")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("case")
        s.add_argument("--kind", default="mixed", help="ptdf, pure or mixed")
        if name == "sced":
            s.add_argument("--periods", type=int, default=24)
            s.add_argument("--load-range", type=float, nargs=2, default=(0.95, 1.05), metavar=("LO", "HI"))
            s.add_argument("--ramp", type=float, default=None, help="ramp limit in MW/h for every unit")

    s = sub.add_parser("report", parents=[common], help="sparsity report of the three formulations")
    s.add_argument("case")
    s.add_argument("--kinds", default="ptdf,pure,mixed")
    s.add_argument("--spy-dir", default=None, help="write row,col coordinate files here")

    s = sub.add_parser("outer", parents=[common], help="outer approximation sweep by branch deletion")
    s.add_argument("case")
    s.add_argument("--kinds", default="ptdf,mixed")
    s.add_argument("--strategy", choices=("random", "most_uncongested"), default="random")
    s.add_argument("--ratios", default="0,0.5,0.9,0.98")

    s = sub.add_parser("bench", parents=[common], help="benchmark cases x formulations")
    s.add_argument("cases", nargs="*")
    s.add_argument("--kinds", default="ptdf,pure,mixed")
    s.add_argument("--mode", choices=("opf", "sced"), default="opf")
    s.add_argument("--periods", type=int, default=24)
    return p


def _kinds(text: str) -> list[FormulationKind]:
    try:
        return [FormulationKind.parse(k.strip()) for k in text.split(",") if k.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ipm(args) -> IpmOptions:
    return IpmOptions(tol=args.tol, max_iter=args.max_iter, linear_path=args.path)


def _config(args, periods: int = 24, load_range=(0.95, 1.05), ramp=None) -> BenchConfig:
    return BenchConfig(ipm=_ipm(args), merge=args.merge_gens, ref_bus=args.ref_bus, impute=args.impute,
                       sced=ScedConfig(periods=periods, load_scale_range=tuple(load_range), seed=args.seed,
                                       ramp_override=ramp, ramp_frac=args.ramp_frac))


@contextlib.contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _emit_table(args, rows, default: str = "markdown") -> None:
    fmt = args.format or default
    if args.output:
        export(rows, fmt, args.output, include_timing=not args.no_timing)
    else:
        sys.stdout.write(render(rows, fmt, include_timing=not args.no_timing))


def cmd_parse(args) -> int:
    case = load_case(args.case)
    diags = validate(case)
    for d in diags:
        print(f"{d.severity}: {d.code}: {d.message}", file=sys.stderr)
    summary = case.summary()
    with _sink(args.output) as out:
        if (args.format or "json") == "json":
            out.write(json.dumps(summary, indent=1) + "\n")
        else:
            for k, v in summary.items():
                out.write(f"{k}: {v}\n")
    if args.emit_json:
        Path(args.emit_json).write_text(emit_json(case))
    return EXIT_CASE if any(d.severity == "error" for d in diags) else EXIT_OK


def cmd_ptdf(args) -> int:
    case = load_prepared(args.case, args.merge_gens, args.ref_bus, "never")
    net = build_network(case)
    ptdf = compute_ptdf(net)
    with _sink(args.output) as out:
        if (args.format or "csv") == "json":
            out.write(json.dumps({"bus_ids": [int(b) for b in net.bus_ids], "ref_bus": int(net.bus_ids[net.ref_bus]),
                                  "ptdf": ptdf.data.tolist()}) + "\n")
        else:
            out.write("branch," + ",".join(str(int(b)) for b in net.bus_ids) + "\n")
            for i, row in enumerate(ptdf.data):
                out.write(f"{i}," + ",".join(format(v, ".10g") for v in row) + "\n")
    return EXIT_OK


def _solve_and_emit(args, bundle) -> int:
    trace = open(args.trace, "w") if args.trace else None
    try:
        sol = solve_qp(bundle.qp, _ipm(args), trace_file=trace)
    finally:
        if trace:
            trace.close()
    if not sol.optimal:
        print(f"solve failed: {sol.status} after {sol.iterations} iterations {sol.message}".rstrip(), file=sys.stderr)
        return EXIT_SOLVE
    res = recover(bundle, sol)
    gens = [g for g in bundle.case.generators if g.status]
    doc = {
        "case": bundle.case.name, "kind": bundle.kind.label, "status": sol.status,
        "iterations": sol.iterations, "objective": res.objective, "periods": bundle.periods,
        "generators": [int(g.bus) for g in gens], "p_g": res.p_g.tolist(),
        "flows": res.flows.tolist(), "branch_duals": res.branch_duals.tolist(),
    }
    if res.theta is not None:
        doc["theta"] = res.theta.tolist()
    with _sink(args.output) as out:
        fmt = args.format or "json"
        if fmt == "json":
            out.write(json.dumps(doc) + "\n")
        else:
            out.write(f"objective,{res.objective:.10g}\n")
            out.write("period,gen_bus,p_mw\n" if fmt == "csv" else "| period | gen_bus | p_mw |\n|---|---|---|\n")
            for t in range(bundle.periods):
                for g, p in zip(gens, res.p_g[t]):
                    out.write(f"{t},{g.bus},{p:.6g}\n" if fmt == "csv" else f"| {t} | {g.bus} | {p:.6g} |\n")
    return EXIT_OK


def cmd_opf(args) -> int:
    kind = _kinds(args.kind)[0]
    case = load_prepared(args.case, args.merge_gens, args.ref_bus, args.impute)
    net = build_network(case)
    return _solve_and_emit(args, build_opf(case, net, None, kind))


def cmd_sced(args) -> int:
    kind = _kinds(args.kind)[0]
    cfg = _config(args, args.periods, args.load_range, args.ramp)
    case = load_prepared(args.case, args.merge_gens, args.ref_bus, args.impute)
    net = build_network(case)
    return _solve_and_emit(args, build_sced(case, net, None, kind, cfg.sced))


def cmd_report(args) -> int:
    kinds = _kinds(args.kinds)
    case = load_prepared(args.case, args.merge_gens, args.ref_bus, args.impute)
    net = build_network(case)
    ptdf = compute_ptdf(net) if FormulationKind.PTDF in kinds else None
    rows = []
    for kind in kinds:
        bundle = build_opf(case, net, ptdf, kind)
        rows.append(sparsity_report(bundle))
        if args.spy_dir:
            Path(args.spy_dir).mkdir(parents=True, exist_ok=True)
            spy_export(bundle, Path(args.spy_dir) / f"{case.name}_{kind.value}.spy")
    _emit_table(args, rows)
    return EXIT_OK


def cmd_outer(args) -> int:
    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ratios: {exc}") from exc
    if any(not 0 <= r <= 1 for r in ratios):
        raise UsageError("ratios must lie in [0, 1]")
    rows = run_outer_sweep(args.case, _kinds(args.kinds), args.strategy, ratios, args.seed, _config(args))
    _emit_table(args, rows)
    return EXIT_SOLVE if any(r.status != "Optimal" for r in rows) else EXIT_OK


def cmd_bench(args) -> int:
    rows = run_benchmark(args.cases, _kinds(args.kinds), args.mode, _config(args, args.periods))
    _emit_table(args, rows, default="csv")
    return EXIT_SOLVE if any(r.status != "Optimal" for r in rows) else EXIT_OK


COMMANDS = {"parse": cmd_parse, "ptdf": cmd_ptdf, "opf": cmd_opf, "sced": cmd_sced,
            "report": cmd_report, "outer": cmd_outer, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dcsc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, CaseError) as exc:
        print(f"dcsc: {exc}", file=sys.stderr)
        return EXIT_CASE
    except OSError as exc:
        print(f"dcsc: {exc}", file=sys.stderr)
        return EXIT_CASE


if __name__ == "__main__":
    sys.exit(main())
