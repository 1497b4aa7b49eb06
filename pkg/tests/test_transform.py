import numpy as np
import pytest

from dcsc.caseio import load_builtin, prepare
from dcsc.errors import ContractError
from dcsc.formulations import FormulationKind, build_opf, build_ptdf_nodal
from dcsc.ipm import AUGMENTED, IpmIterate, kkt_nnz, newton_direction, solve_qp, transformed_newton_direction
from dcsc.network import build_network, compute_ptdf
from dcsc.sparse import CscMatrix, ldlt_solve

from cases import triangle


def miniature():
    """Triangle network, two monitored branches, G = I on the two free injections."""
    net = build_network(triangle())
    b = net.b_bus_red.to_dense()
    bf = net.b_f_red.to_dense()[:2]
    ptdf = compute_ptdf(net).reduced[:2]
    return b, bf, ptdf


def test_miniature_ptdf_is_bf_binv():
    b, bf, ptdf = miniature()
    np.testing.assert_allclose(ptdf, bf @ np.linalg.inv(b), atol=1e-15)


def test_miniature_transformed_matches_direct():
    b, bf, ptdf = miniature()
    g = np.eye(2)
    rhs_a = np.array([0.3, -1.2])
    rhs_b = np.array([0.7, 0.25])
    direct = np.linalg.solve(np.block([[g, ptdf.T], [ptdf, np.zeros((2, 2))]]), np.concatenate([rhs_a, rhs_b]))
    k = np.block([[b.T @ g @ b, bf.T], [bf, np.zeros((2, 2))]])
    sol, _ = ldlt_solve(CscMatrix.from_dense(np.tril(k)), np.concatenate([b.T @ rhs_a, rhs_b]), n_primal=2)
    dx = b @ sol[:2]
    assert np.abs(dx - direct[:2]).max() <= 1e-12
    assert np.abs(sol[2:] - direct[2:]).max() <= 1e-12


@pytest.fixture(scope="module")
def nodal39():
    case = prepare(load_builtin("case39"))
    net = build_network(case)
    ptdf = compute_ptdf(net)
    return build_ptdf_nodal(case, net, ptdf), net, case, ptdf


def test_nodal_objective_matches_formulations(nodal39):
    bundle, net, case, ptdf = nodal39
    s = solve_qp(bundle.qp)
    ref = solve_qp(build_opf(case, net, ptdf, FormulationKind.MIXED).qp)
    assert s.optimal and s.objective == pytest.approx(ref.objective, rel=1e-6)


def _random_iterate(rng, qp):
    return IpmIterate(rng.normal(scale=0.2, size=qp.n), rng.uniform(0.01, 3, qp.m),
                      rng.uniform(0.01, 3, qp.m), rng.normal(size=qp.p))


@pytest.mark.parametrize("mode", ["affine", "corrected"])
def test_case39_transformed_direction_matches_dense(nodal39, mode):
    bundle, net, _, _ = nodal39
    qp = bundle.qp
    rng = np.random.default_rng(2024)
    sl = qp.names.var["p_bus"]
    for _ in range(20):
        it = _random_iterate(rng, qp)
        dense = newton_direction(qp, it, rhs_mode="affine", path=AUGMENTED)
        r_ly = it.y * it.lam
        if mode == "corrected":
            r_ly = r_ly + dense.dy * dense.dlam - 0.1 * it.mu
            from dcsc.ipm import KktSystem
            from dcsc.ipm.qp import residuals
            k = KktSystem(qp, AUGMENTED)
            k.factor(it)
            dense = k.solve(it, residuals(qp, it), r_ly)
        td = transformed_newton_direction(qp, net, it, r_ly=r_ly)
        np.testing.assert_allclose(td.dp_bus, net.b_bus_red.matvec(td.dtheta), atol=1e-12)
        scale = max(1.0, np.abs(dense.dx[sl]).max())
        assert np.abs(td.dp_bus - dense.dx[sl]).max() <= 1e-8 * scale
        for a, b in ((td.direction.dlam, dense.dlam), (td.direction.dy, dense.dy), (td.direction.dnu, dense.dnu)):
            assert np.abs(a - b).max() <= 1e-8 * max(1.0, np.abs(b).max())


def test_transformed_coefficient_is_sparse(nodal39):
    bundle, net, _, _ = nodal39
    it = _random_iterate(np.random.default_rng(0), bundle.qp)
    td = transformed_newton_direction(bundle.qp, net, it)
    flows = bundle.qp.names.ineq["flow_lower"]
    assert td.system.A.to_scipy().tocsr()[flows].nnz == net.b_f_red.to_scipy().tocsr()[net.limited].nnz
    assert 2 * kkt_nnz(td.system) <= kkt_nnz(bundle.qp)


def test_missing_p_bus_block_rejected(nodal39):
    _, net, case, ptdf = nodal39
    qp = build_opf(case, net, ptdf, FormulationKind.PTDF).qp
    it = _random_iterate(np.random.default_rng(1), qp)
    with pytest.raises(ContractError, match="p_bus"):
        transformed_newton_direction(qp, net, it)
