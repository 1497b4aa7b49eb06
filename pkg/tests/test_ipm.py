import io
import json

import numpy as np
import pytest

from dcsc.errors import ContractError
from dcsc.ipm import (
    AUGMENTED, NORMAL, IpmIterate, KktSystem, QuadraticProgram, choose_path, mehrotra_step,
    newton_direction, newton_residual, residuals, solve_qp, starting_point,
)
from oracles import active_set_oracle, dense_kkt_residuals, dense_newton, random_qp


def qp_from(g, c, a, b, e=None, h=None):
    return QuadraticProgram.build(g, c, a, b, e, h)


def random_interior(rng, qp):
    return IpmIterate(rng.standard_normal(qp.n), rng.random(qp.m) + 0.1,
                      rng.random(qp.m) + 0.1, rng.standard_normal(qp.p))


def test_scalar_box():
    s = solve_qp(QuadraticProgram.build([[2.0]], [-4.0], [[-1.0]], [-1.0], offset=4.0))
    assert s.status == "Optimal"
    assert s.x[0] == pytest.approx(1.0, abs=1e-7)
    assert s.iterate.lam[0] == pytest.approx(2.0, abs=1e-6)
    assert s.objective == pytest.approx(1.0, abs=1e-7)


def test_two_lower_bounds():
    s = solve_qp(QuadraticProgram.build(np.eye(2), [0, 0], np.eye(2), [1, 1]))
    assert s.status == "Optimal"
    assert np.allclose(s.x, [1, 1], atol=1e-7)
    assert np.allclose(s.iterate.lam, [1, 1], atol=1e-6)


@pytest.mark.parametrize("path", [NORMAL, AUGMENTED])
def test_random_qps_match_oracle(path):
    rng = np.random.default_rng(7)
    for _ in range(40):
        g, c, a, b, e, h = random_qp(rng)
        x_ref, _, _ = active_set_oracle(g, c, a, b)
        s = solve_qp(qp_from(g, c, a, b), linear_path=path, tol=1e-10)
        assert s.status == "Optimal"
        assert np.max(np.abs(s.x - x_ref)) <= 1e-6
        it = s.iterate
        assert max(dense_kkt_residuals(g, c, a, b, np.zeros((0, len(c))), np.zeros(0),
                                       it.x, it.y, it.lam, it.nu)) <= 1e-8


def test_random_qps_with_equalities():
    rng = np.random.default_rng(8)
    for _ in range(25):
        g, c, a, b, e, h = random_qp(rng, with_eq=True)
        ref = active_set_oracle(g, c, a, b, e, h)
        s = solve_qp(qp_from(g, c, a, b, e, h), tol=1e-10)
        assert s.status == "Optimal" and s.stats.path == AUGMENTED
        assert np.max(np.abs(s.x - ref[0])) <= 1e-6


def test_normal_path_with_equalities():
    rng = np.random.default_rng(9)
    g, c, a, b, e, h = random_qp(rng, n=5, m=6, with_eq=True)
    s1 = solve_qp(qp_from(g, c, a, b, e, h), linear_path=NORMAL)
    s2 = solve_qp(qp_from(g, c, a, b, e, h), linear_path=AUGMENTED)
    assert s1.optimal and s2.optimal
    assert np.allclose(s1.x, s2.x, atol=1e-6)


def test_auto_path_rules():
    n = 50
    sparse_a = np.eye(n)
    qp = QuadraticProgram.build(np.eye(n), np.zeros(n), sparse_a, np.zeros(n))
    assert choose_path(qp) == NORMAL
    dense_a = np.vstack([np.eye(n), np.ones((1, n))])
    qp = QuadraticProgram.build(np.eye(n), np.zeros(n), dense_a, np.zeros(n + 1))
    assert choose_path(qp) == AUGMENTED
    qp = QuadraticProgram.build(np.eye(n), np.zeros(n), sparse_a, np.zeros(n), np.ones((1, n)), [1.0])
    assert choose_path(qp) == AUGMENTED


# ---------------------------------------------------------------- directions
def test_direction_vanishes_at_solution():
    # x = 1 solves min 1/2 x^2 - x with x >= 0 inactive... use exact KKT point with tiny mu
    qp = QuadraticProgram.build([[1.0]], [-1.0], [[1.0]], [0.0])
    it = IpmIterate(np.array([1.0]), np.array([1.0]), np.array([1e-14]), np.zeros(0))
    # r_d = x - lam - 1 = -1e-14; affine target y*lam = 1e-14
    d = newton_direction(qp, it, "affine")
    assert d.inf_norm() <= 1e-10


def test_direction_one_variable_dense():
    qp = QuadraticProgram.build([[1.0]], [0.0], [[1.0]], [-1.0])
    it = IpmIterate(np.array([1.0]), np.array([2.0]), np.array([0.5]), np.zeros(0))
    res = residuals(qp, it)
    r_ly = it.y * it.lam
    ref = dense_newton(np.eye(1), np.eye(1), np.zeros((0, 1)), it.x, it.y, it.lam, it.nu,
                       res.r_d, res.r_p, res.r_e, r_ly)
    for path in (NORMAL, AUGMENTED):
        d = newton_direction(qp, it, "affine", path=path)
        assert np.allclose(np.concatenate([d.dx, d.dy, d.dlam]), np.concatenate(ref[:3]), atol=1e-12)


def test_paths_agree_on_random_iterates():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g, c, a, b, _, _ = random_qp(rng)
        qp = qp_from(g, c, a, b)
        it = random_interior(rng, qp)
        for mode in ("affine", "corrected"):
            dn = newton_direction(qp, it, mode, path=NORMAL)
            da = newton_direction(qp, it, mode, path=AUGMENTED)
            scale = 1 + max(dn.inf_norm(), da.inf_norm())
            assert np.max(np.abs(dn.as_vector() - da.as_vector())) <= 1e-9 * scale


def test_direction_satisfies_full_system():
    rng = np.random.default_rng(4)
    for _ in range(20):
        g, c, a, b, e, h = random_qp(rng, with_eq=True)
        qp = qp_from(g, c, a, b, e, h)
        it = random_interior(rng, qp)
        kkt = KktSystem(qp)
        kkt.factor(it)
        res = residuals(qp, it)
        r_ly = it.y * it.lam - 0.1 * it.mu
        d = kkt.solve(it, res, r_ly)
        assert newton_residual(qp, it, res, r_ly, d) <= 1e-8
        ref = dense_newton(g, a, e, it.x, it.y, it.lam, it.nu, res.r_d, res.r_p, res.r_e, r_ly)
        assert np.allclose(d.dx, ref[0], atol=1e-7 * (1 + np.abs(ref[0]).max()))


def test_direction_requires_interior():
    qp = QuadraticProgram.build([[1.0]], [0.0], [[1.0]], [0.0])
    it = IpmIterate(np.zeros(1), np.array([0.0]), np.array([1.0]), np.zeros(0))
    with pytest.raises(ContractError):
        newton_direction(qp, it)


def test_one_factorization_two_solves_per_iteration():
    rng = np.random.default_rng(5)
    g, c, a, b, _, _ = random_qp(rng, n=6, m=9)
    qp = qp_from(g, c, a, b)
    kkt = KktSystem(qp)
    it = starting_point(qp)
    for k in range(1, 4):
        it, _ = mehrotra_step(qp, it, kkt)
        assert kkt.stats.factorizations == k
        assert kkt.stats.direction_solves == 2 * k
    assert kkt.stats.symbolic_analyses == 1


def test_step_keeps_interior_and_converged_point_is_stable():
    qp = QuadraticProgram.build(np.eye(2), [0, 0], np.eye(2), [1, 1])
    s = solve_qp(qp)
    nxt, _ = mehrotra_step(qp, s.iterate)
    assert nxt.is_interior()
    assert np.allclose(nxt.x, s.x, atol=1e-8)
    s2 = solve_qp(qp, start=s.iterate)
    assert s2.optimal and s2.iterations == 0


def test_complementarity_decreases():
    rng = np.random.default_rng(6)
    steps = down = 0
    tails = []
    for _ in range(60):
        g, c, a, b, _, _ = random_qp(rng)
        s = solve_qp(qp_from(g, c, a, b))
        mus = [t["mu"] for t in s.trace]
        steps += len(mus) - 1
        down += sum(1 for u, v in zip(mus, mus[1:]) if v <= u)
        tails.append(all(v < u for u, v in zip(mus[-3:], mus[-2:])))
    assert down >= 0.9 * steps
    assert all(tails)


def test_trace_json_lines():
    buf = io.StringIO()
    solve_qp(QuadraticProgram.build(np.eye(2), [0, 0], np.eye(2), [1, 1]), trace_file=buf)
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert lines and {"iter", "mu", "r_d", "r_p", "factor_ops"} <= set(lines[0])


def test_infeasible_is_flagged():
    # x >= 1 and -x >= 0 cannot both hold
    qp = QuadraticProgram.build([[1.0]], [0.0], [[1.0], [-1.0]], [1.0, 0.0])
    s = solve_qp(qp)
    assert s.status != "Optimal"


def test_max_iterations_status():
    rng = np.random.default_rng(2)
    g, c, a, b, _, _ = random_qp(rng, n=5, m=8)
    s = solve_qp(qp_from(g, c, a, b), max_iter=1)
    assert s.status == "MaxIterations"
