import json

import numpy as np
import pytest

from dcsc import cli
from dcsc.bench import (
    BenchRow, export, load_report, matrix_report, render, run_benchmark, run_outer_sweep, sparsity_report,
    spy_export, spy_lines,
)
from dcsc.caseio import load_builtin, prepare
from dcsc.formulations import ALL_KINDS, build_opf
from dcsc.network import build_network, compute_ptdf

from cases import TWO_BUS


@pytest.fixture(scope="module")
def bundles39():
    case = prepare(load_builtin("case39"))
    net = build_network(case)
    ptdf = compute_ptdf(net)
    return [build_opf(case, net, ptdf, k) for k in ALL_KINDS]


def test_identity_report():
    r = matrix_report(np.eye(5))
    assert (r.nnz_a, r.density_a, r.nnz_aat_lower) == (5, 1 / 5, 5)


def test_aat_lower_matches_dense_pattern():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.normal(size=(7, 5)) * (rng.random((7, 5)) < 0.3)
        pat = (a != 0).astype(int)
        dense = np.tril((pat @ pat.T) > 0).sum()
        assert matrix_report(a).nnz_aat_lower == dense


def test_case39_reports(bundles39):
    reps = [sparsity_report(b) for b in bundles39]
    assert [(r.n_vars, r.n_cons) for r in reps] == [(10, 112), (39, 170), (49, 151)]
    for r, b in zip(reps, bundles39):
        a = b.counted_rows().to_dense()
        assert r.nnz_a == np.count_nonzero(np.abs(a) > 1e-10)
        assert r.density_a == pytest.approx(r.nnz_a / (r.n_vars * r.n_cons))
        pat = (a != 0).astype(int)
        assert r.nnz_aat_lower == np.tril((pat @ pat.T) > 0).sum()
    assert reps[0].density_a > reps[1].density_a >= reps[2].density_a
    assert reps[0].factor_ops / reps[2].factor_ops >= 10


def test_spy_lines(bundles39, tmp_path):
    assert spy_lines(np.eye(2)) == ["0,0", "1,1"]
    path = spy_export(bundles39[0], tmp_path / "a.spy")
    lines = path.read_text().splitlines()
    assert len(lines) == sparsity_report(bundles39[0]).nnz_a
    pairs = [tuple(map(int, s.split(","))) for s in lines]
    assert pairs == sorted(pairs)


def test_export_empty_csv(tmp_path):
    p = export([], "csv", tmp_path / "e.csv")
    assert p.read_text().count("\n") == 1


def test_export_round_trips(tmp_path, bundles39):
    rows = [BenchRow(**vars(sparsity_report(b)), solve_time=0.125, barrier_iterations=9,
                     objective=41263.940785857, build_time=0.5, status="Optimal") for b in bundles39]
    export(rows, "json", tmp_path / "r.json")
    assert load_report(tmp_path / "r.json") == rows
    export(rows[:1], "csv", tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert len(text.splitlines()) == 2 and "\r" not in text
    back = load_report(tmp_path / "r.csv")[0]
    assert back.n_cons == rows[0].n_cons and back.objective == pytest.approx(rows[0].objective, rel=1e-5)
    assert "| kind |" in render(rows, "markdown")


def test_run_benchmark_empty():
    assert run_benchmark([], ["ptdf"]) == []


def test_run_benchmark_case39():
    rows = run_benchmark(["case39"], ["ptdf", "pure", "mixed"])
    assert len(rows) == 3 and all(r.status == "Optimal" for r in rows)
    objs = [r.objective for r in rows]
    assert max(objs) - min(objs) <= 1e-6 * objs[0]


def test_run_benchmark_records_failures():
    rows = run_benchmark(["no_such_case.m", "case39"], ["mixed"])
    assert rows[0].status == "Error" and rows[0].error
    assert rows[1].status == "Optimal"


def test_outer_sweep_structure():
    rows = run_outer_sweep("case39", ["ptdf", "mixed"], "random", [0, 0.5, 0.9, 0.98], seed=1)
    assert len(rows) == 8
    for kind in ("Ptdf", "Mixed"):
        objs = [r.objective for r in rows if r.kind == kind]
        assert all(b <= a + 1e-8 * abs(a) for a, b in zip(objs, objs[1:]))
    full = run_benchmark(["case39"], ["ptdf"])[0]
    assert rows[0].objective == pytest.approx(full.objective, rel=1e-9)


# ---------------------------------------------------------------- CLI
def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_parse(capsys, tmp_path):
    f = tmp_path / "two.m"
    f.write_text(TWO_BUS)
    code, out, _ = run(capsys, "parse", str(f), "--emit-json", str(tmp_path / "two.json"))
    assert code == 0 and json.loads(out)["buses"] == 2
    code, out, _ = run(capsys, "parse", str(tmp_path / "two.json"))
    assert code == 0


def test_cli_parse_error_exit(capsys, tmp_path):
    f = tmp_path / "bad.m"
    f.write_text(TWO_BUS.split("mpc.branch")[0])
    assert run(capsys, "parse", str(f))[0] == cli.EXIT_CASE


def test_cli_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["opf"])
    assert exc.value.code == cli.EXIT_USAGE
    assert run(capsys, "opf", "case39", "--kind", "ac")[0] == cli.EXIT_USAGE


def test_cli_ptdf_csv(capsys, tmp_path):
    f = tmp_path / "two.m"
    f.write_text(TWO_BUS)
    code, out, _ = run(capsys, "ptdf", str(f))
    assert code == 0
    assert out.splitlines() == ["branch,1,2", "0,0,-1"]


def test_cli_opf_and_trace(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "opf", "case39", "--kind", "ptdf", "--trace", str(trace))
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "Optimal" and doc["objective"] == pytest.approx(41263.9408, rel=1e-8)
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    assert recs[-1]["iter"] == doc["iterations"]
    assert {"mu", "r_d", "r_p", "factor_ops"} <= set(recs[0])


def test_cli_solve_failure_exit(capsys):
    assert run(capsys, "opf", "case39", "--max-iter", "2")[0] == cli.EXIT_SOLVE


def test_cli_report_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "report", "case39", "--format", "csv", "-o", str(a), "--spy-dir", str(tmp_path))[0] == 0
    assert run(capsys, "report", "case39", "--format", "csv", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "case39_ptdf.spy").exists()


def test_cli_sced_bench_outer(capsys, tmp_path):
    code, out, _ = run(capsys, "sced", "case39", "--periods", "3", "--kind", "mixed", "--format", "csv")
    assert code == 0 and out.startswith("objective,")
    code, out, _ = run(capsys, "bench", "case39", "--kinds", "mixed", "--no-timing")
    assert code == 0 and "solve_time" not in out.splitlines()[0]
    code, out, _ = run(capsys, "outer", "case39", "--ratios", "0,0.5", "--format", "json")
    assert code == 0 and len(json.loads(out)["rows"]) == 4
    assert run(capsys, "outer", "case39", "--ratios", "0,2")[0] == cli.EXIT_USAGE
    assert run(capsys, "bench")[0] == 0
