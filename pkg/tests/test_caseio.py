import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsc.caseio import (
    BUILTIN, BusType, Generator, emit_json, errors, load_builtin, merge_colocated_generators,
    merged_cost, parse_case, parse_json, parse_matpower, prepare, reference_bus, remove_out_of_service, validate,
)
from dcsc.errors import CaseError, MergeError, ParseError

from cases import TWO_BUS, grid, triangle


def test_two_bus_parses():
    case = parse_matpower(TWO_BUS)
    assert (len(case.buses), len(case.branches), len(case.generators)) == (2, 1, 1)
    assert case.base_mva == 100
    assert case.buses[0].bus_type == BusType.REF
    assert case.branches[0].x == 0.5 and case.branches[0].rate_a == 80
    g = case.generators[0]
    assert (g.pmin, g.pmax, g.cost) == (0, 100, (0.1, 5, 2))
    assert validate(case) == []


def test_case39_sizes():
    case = load_builtin("case39")
    assert (len(case.buses), len(case.generators), len(case.branches)) == (39, 10, 46)


def test_missing_branch_block_named():
    text = TWO_BUS.split("mpc.branch")[0] + "mpc.gencost = [\n 2 0 0 3 0.1 5 2;\n];\n"
    with pytest.raises(ParseError, match="mpc.branch"):
        parse_matpower(text)


def test_ragged_row_reports_line():
    text = TWO_BUS.replace("2\t1\t50\t0\t0\t0\t1\t1\t0\t230\t1\t1.1\t0.9;", "2\t1\t50;")
    with pytest.raises(ParseError) as exc:
        parse_matpower(text)
    assert exc.value.line is not None


def test_non_numeric_token():
    with pytest.raises(ParseError, match="non-numeric"):
        parse_matpower(TWO_BUS.replace("0.5\t0\t80", "0.5\tabc\t80"))


def test_piecewise_cost_rejected():
    with pytest.raises(ParseError):
        parse_matpower(TWO_BUS.replace("2\t0\t0\t3\t0.1\t5\t2", "1\t0\t0\t2\t0\t0\t100\t500"))


def test_linear_cost_gets_zero_a():
    case = parse_matpower(TWO_BUS.replace("2\t0\t0\t3\t0.1\t5\t2", "2\t0\t0\t2\t5\t2\t0"))
    assert case.generators[0].cost == (0.0, 5.0, 2.0)


@pytest.mark.parametrize("name", BUILTIN)
def test_json_round_trip(name):
    case = load_builtin(name)
    assert parse_json(emit_json(case)) == case
    assert parse_case(emit_json(case)) == case


def test_validate_two_refs_named():
    case = grid([(1, 3, 0), (2, 3, 0)], [(1, 2, 0.1, 0)], [(1, 0, 10, (0, 1, 0))])
    d = [x for x in validate(case) if x.code == "multiple-ref"]
    assert len(d) == 1 and "1" in d[0].message and "2" in d[0].message


def test_validate_zero_reactance_named():
    case = grid([(1, 3, 0), (2, 1, 0)], [(1, 2, 0.0, 0)], [(1, 0, 10, (0, 1, 0))])
    d = [x for x in validate(case) if x.code == "nonpositive-reactance"]
    assert len(d) == 1 and "1" in d[0].message and "2" in d[0].message
    assert errors(validate(case))


def test_validate_disconnected():
    case = grid([(1, 3, 0), (2, 1, 0), (3, 1, 0)], [(1, 2, 0.1, 0)], [(1, 0, 10, (0, 1, 0))])
    assert any(x.code == "disconnected" for x in validate(case))


def test_negative_reactance_is_warning_only():
    case = load_builtin("case300")
    diags = validate(case)
    assert any(x.code == "negative-reactance" for x in diags)
    assert not errors(diags)


def test_reference_fallback_lowest_gen_bus():
    case = grid([(5, 1, 0), (2, 1, 0), (3, 1, 0)], [(5, 2, 0.1, 0), (2, 3, 0.1, 0)],
                [(5, 0, 10, (0, 1, 0)), (3, 0, 10, (0, 1, 0))])
    assert reference_bus(case) == 3


def test_multiple_refs_rejected_in_preprocessing():
    case = grid([(1, 3, 0), (2, 3, 0)], [(1, 2, 0.1, 0)], [(1, 0, 10, (0, 1, 0))])
    with pytest.raises(CaseError):
        reference_bus(case)


def test_out_of_service_removed():
    case = triangle()
    case = case.replace(branches=[*case.branches[:2], type(case.branches[2])(1, 3, 1.0, 0.0, False)])
    assert len(remove_out_of_service(case).branches) == 2


def test_merge_single_unchanged():
    case = triangle()
    assert merge_colocated_generators(case) == case


def test_merge_identical_pair():
    g = Generator(1, 0, 50, (0.1, 5, 0))
    case = grid([(1, 3, 0)], [], [])
    case = case.replace(generators=[g, g])
    merged = merge_colocated_generators(case).generators
    assert len(merged) == 1
    m = merged[0]
    assert m.a == pytest.approx(0.05) and m.b == pytest.approx(5)
    assert (m.pmin, m.pmax) == (0, 100)


def test_merge_linear_member_rejected():
    case = grid([(1, 3, 0)], [], [(1, 0, 50, (0.0, 5, 0)), (1, 0, 50, (0.1, 5, 0))])
    with pytest.raises(MergeError):
        merge_colocated_generators(case)


def _grid_search_cost(gens, total, k=20001):
    """Minimum of summed member cost over splits of ``total`` between two units."""
    g1, g2 = gens
    p1 = np.linspace(max(g1.pmin, total - g2.pmax), min(g1.pmax, total - g2.pmin), k)
    cost = g1.cost_at(p1) + g2.cost_at(total - p1)
    return cost.min()


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0, 20), st.floats(0, 20),
       st.floats(0, 10), st.floats(0, 10), st.floats(0.2, 0.8))
def test_merged_cost_matches_infimal_convolution(a1, a2, b1, b2, c1, c2, frac):
    g1 = Generator(1, 0, 1000, (a1, b1, c1))
    g2 = Generator(1, 0, 1000, (a2, b2, c2))
    a, b, c = merged_cost([g1, g2])
    # pick a total whose equal-marginal split is interior
    mu = 2 * max(a1, a2) * 400 + max(b1, b2) * frac + 20
    p1, p2 = (mu - b1) / (2 * a1), (mu - b2) / (2 * a2)
    if not (0 < p1 < 1000 and 0 < p2 < 1000):
        return
    total = p1 + p2
    exact = g1.cost_at(p1) + g2.cost_at(p2)
    assert a * total**2 + b * total + c == pytest.approx(exact, rel=1e-9)
    assert exact <= _grid_search_cost((g1, g2), total) + 1e-6 * exact


def test_merge_idempotent():
    case = grid([(1, 3, 0), (2, 1, 30)], [(1, 2, 0.1, 0)],
                [(1, 0, 50, (0.1, 5, 1)), (1, 0, 40, (0.2, 4, 2)), (2, 0, 40, (0.2, 4, 2))])
    once = merge_colocated_generators(case)
    assert len(once.generators) == 2
    assert merge_colocated_generators(once) == once


def test_prepare_merges_on_request():
    case = grid([(1, 3, 0)], [], [(1, 0, 50, (0.1, 5, 1)), (1, 0, 40, (0.2, 4, 2))])
    assert len(prepare(case, merge=True).generators) == 1
    assert len(prepare(case).generators) == 2
