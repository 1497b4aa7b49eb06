"""Independent reference computations used by the tests (dense, brute force)."""
import itertools

import numpy as np


def random_qp(rng, n=None, m=None, with_eq=False):
    """Feasible random convex QP ``G = M'M + I`` as dense arrays."""
    n = n or int(rng.integers(1, 9))
    m = m if m is not None else int(rng.integers(1, 13))
    mm = rng.standard_normal((n, n))
    g = mm.T @ mm + np.eye(n)
    c = rng.standard_normal(n) * 3
    a = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    b = a @ x0 - rng.random(m)
    e = h = None
    if with_eq:
        p = int(rng.integers(1, max(2, n)))
        e = rng.standard_normal((p, n))
        h = e @ x0
    return g, c, a, b, e, h


def active_set_oracle(g, c, a, b, e=None, h=None, tol=1e-9):
    """Try every active set; return ``(x, lam)`` of the KKT point, or None.

    For strictly convex ``g`` the KKT point is unique, so the first active set
    whose solution is primal feasible with nonnegative multipliers is it.
    """
    n, m = g.shape[0], a.shape[0]
    e = np.zeros((0, n)) if e is None else e
    h = np.zeros(0) if h is None else h
    p = e.shape[0]
    for k in range(m + 1):
        for act in itertools.combinations(range(m), k):
            act = list(act)
            ab = a[act]
            q = len(act) + p
            kkt = np.zeros((n + q, n + q))
            kkt[:n, :n] = g
            rows = np.vstack([ab, e])
            kkt[:n, n:] = -rows.T
            kkt[n:, :n] = rows
            rhs = np.concatenate([-c, b[act], h])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            x, mult = sol[:n], sol[n:]
            lam_act = mult[:len(act)]
            if np.all(a @ x >= b - tol) and np.all(lam_act >= -tol):
                lam = np.zeros(m)
                lam[act] = lam_act
                return x, lam, mult[len(act):]
    return None


def dense_kkt_residuals(g, c, a, b, e, h, x, y, lam, nu):
    """Scaled residuals recomputed in plain dense arithmetic."""
    inf = lambda v: float(np.max(np.abs(v), initial=0.0))
    rd = g @ x - a.T @ lam - e.T @ nu + c
    rp = a @ x - y - b
    re = e @ x - h
    gap = float(y @ lam) / len(y) if len(y) else 0.0
    return inf(rd) / (1 + inf(c)), inf(rp) / (1 + inf(b)), inf(re) / (1 + inf(h)), gap


def dense_newton(g, a, e, x, y, lam, nu, r_d, r_p, r_e, r_ly):
    """Full unreduced Newton system solved densely: returns (dx, dy, dlam, dnu)."""
    n, m, p = g.shape[0], a.shape[0], e.shape[0]
    size = n + 2 * m + p
    k = np.zeros((size, size))
    ix, iy, il, iv = slice(0, n), slice(n, n + m), slice(n + m, n + 2 * m), slice(n + 2 * m, size)
    k[ix, ix] = g
    k[ix, il] = -a.T
    k[ix, iv] = -e.T
    k[iy, ix] = a
    k[iy, iy] = -np.eye(m)
    k[iv, ix] = e
    k[il, iy] = np.diag(lam)
    k[il, il] = np.diag(y)
    rhs = -np.concatenate([r_d, r_p, r_ly, r_e])
    # row order above: dual, primal, complementarity, equality
    kk = np.vstack([k[ix], k[iy], k[il], k[iv]])
    sol = np.linalg.solve(kk, rhs)
    return sol[ix], sol[iy], sol[il], sol[iv]
