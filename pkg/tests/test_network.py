import numpy as np
import pytest

from dcsc.caseio import load_builtin, parse_matpower, prepare
from dcsc.errors import CaseError, DimensionError
from dcsc.network import (
    branch_flows, build_network, compute_ptdf, impute_branch_limits, reference_dispatch, solve_angles,
    spd_certificate,
)

from cases import TWO_BUS, grid, triangle


def dense_network(case):
    """Independent dense construction of C, B_f and B_bus."""
    idx = case.bus_index
    lines = [br for br in case.branches if br.status]
    c = np.zeros((len(lines), len(case.buses)))
    for k, br in enumerate(lines):
        c[k, idx[br.from_bus]] = 1
        c[k, idx[br.to_bus]] = -1
    xinv = np.diag([1 / br.x for br in lines])
    return c, xinv @ c, c.T @ xinv @ c


def test_two_bus_matrices():
    net = build_network(parse_matpower(TWO_BUS))
    np.testing.assert_array_equal(net.incidence_full.to_dense(), [[1, -1]])
    np.testing.assert_array_equal(net.b_f_full.to_dense(), [[2, -2]])
    np.testing.assert_array_equal(net.b_bus_full.to_dense(), [[2, -2], [-2, 2]])
    np.testing.assert_array_equal(net.b_bus_red.to_dense(), [[2]])


def test_two_bus_ptdf_and_flow():
    net = build_network(parse_matpower(TWO_BUS))
    np.testing.assert_allclose(compute_ptdf(net).data, [[0, -1]])
    assert branch_flows(net, [0.0, -0.5])[0] == pytest.approx(1.0)
    assert branch_flows(net, [-0.5])[0] == pytest.approx(1.0)
    np.testing.assert_array_equal(branch_flows(net, np.zeros(2)), [0.0])


def test_triangle_b_bus():
    net = build_network(triangle())
    b = net.b_bus_full.to_dense()
    np.testing.assert_allclose(np.diag(b), [2, 2, 2])
    np.testing.assert_allclose(b - np.diag(np.diag(b)), -(np.ones((3, 3)) - np.eye(3)))


def test_triangle_ptdf_injection_at_bus2():
    ptdf = compute_ptdf(build_network(triangle()))
    # branches 1->2, 2->3, 1->3; unit injection at bus 2 withdrawn at bus 1
    np.testing.assert_allclose(ptdf.data[:, 1], [-2 / 3, 1 / 3, -1 / 3], atol=1e-14)
    np.testing.assert_array_equal(ptdf.data[:, 0], 0)


def test_incidence_rows():
    net = build_network(load_builtin("case39"))
    c = net.incidence_full.to_dense()
    assert np.all((c == 1).sum(axis=1) == 1) and np.all((c == -1).sum(axis=1) == 1)


@pytest.mark.parametrize("name", ["case39", "case118", "case300"])
def test_matrices_match_dense_oracle(name):
    case = prepare(load_builtin(name))
    net = build_network(case)
    c, bf, bbus = dense_network(case)
    np.testing.assert_array_equal(net.incidence_full.to_dense(), c)
    np.testing.assert_allclose(net.b_f_full.to_dense(), bf, rtol=1e-15)
    np.testing.assert_allclose(net.b_bus_full.to_dense(), bbus, rtol=1e-12, atol=1e-9)
    b = net.b_bus_full.to_dense()
    np.testing.assert_array_equal(b, b.T)
    assert np.abs(b.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_case39_spd_certificate():
    net = build_network(load_builtin("case39"))
    assert net.b_bus_red.shape == (38, 38)
    assert spd_certificate(net)


def test_case300_indefinite_but_solvable():
    # negative series reactance: no SPD certificate, PTDF still exact
    net = build_network(prepare(load_builtin("case300")))
    assert not spd_certificate(net)
    ptdf = compute_ptdf(net)
    resid = ptdf.reduced @ net.b_bus_red.to_dense() - net.b_f_red.to_dense()
    assert np.abs(resid).max() <= 1e-10


@pytest.mark.parametrize("name", ["case39", "case118", "case300"])
def test_ptdf_identity_and_flow_invariance(name):
    net = build_network(prepare(load_builtin(name)))
    ptdf = compute_ptdf(net)
    assert np.abs(ptdf.reduced @ net.b_bus_red.to_dense() - net.b_f_red.to_dense()).max() <= 1e-10
    np.testing.assert_array_equal(ptdf.data[:, net.ref_bus], 0)
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = rng.normal(size=net.n_bus)
        p -= p.mean()
        theta = solve_angles(net, p)
        assert theta[net.ref_bus] == 0
        np.testing.assert_allclose(ptdf.flows(p), branch_flows(net, theta), atol=1e-9)


def test_ptdf_density_contrast():
    net = build_network(load_builtin("case39"))
    ptdf = compute_ptdf(net).data
    d_ptdf = np.count_nonzero(np.abs(ptdf) > 1e-10) / ptdf.size
    b = net.b_bus_red.to_dense()
    d_b = np.count_nonzero(b) / b.size
    assert d_ptdf >= 5 * d_b


def test_random_theta_flows_dense():
    case = load_builtin("case39")
    net = build_network(case)
    _, bf, _ = dense_network(case)
    theta = np.random.default_rng(3).normal(size=39)
    np.testing.assert_allclose(branch_flows(net, theta), bf @ theta, rtol=1e-12, atol=1e-12)


def test_dimension_mismatch():
    net = build_network(triangle())
    with pytest.raises(DimensionError):
        branch_flows(net, np.zeros(5))


def test_disconnected_rejected_with_components():
    case = grid([(1, 3, 0), (2, 1, 0), (3, 1, 0)], [(1, 2, 0.1, 0)], [(1, 0, 10, (0, 1, 0))])
    with pytest.raises(CaseError, match="islands"):
        build_network(case)


def test_imputed_limits_keep_reference_point_feasible():
    case = prepare(load_builtin("case118"))
    assert case.n_limited == 0
    rated = impute_branch_limits(case)
    assert rated.n_limited == len(rated.branches)
    net = build_network(rated)
    from dcsc.network import bus_loads, gen_incidence
    inj = gen_incidence(rated).matvec(reference_dispatch(rated)) - bus_loads(rated)
    flows = compute_ptdf(net).flows(inj)
    assert np.all(np.abs(flows) < net.rate_a)
