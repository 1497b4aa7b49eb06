"""Infeasible-start primal-dual interior-point method with Mehrotra's corrector."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, NearSingularError
from ..sparse import CscMatrix, ldlt_solve
from .kkt import AUTO, KktSystem, corrector_rhs, max_step
from .qp import (
    INFEASIBLE, MAX_ITERATIONS, NEAR_SINGULAR, OPTIMAL,
    IpmIterate, IpmSolution, QuadraticProgram, SolveStats, residuals, scaled_residuals,
)

log = logging.getLogger(__name__)

STEP_FRACTION = 0.9995
MIN_STEP = 1e-12
DIVERGENCE_WINDOW = 10
#: iterates this large in norm are taken as a certificate of infeasibility
BLOWUP = 1e12


@dataclass(frozen=True)
class IpmOptions:
    tol: float = 1e-8
    max_iter: int = 100
    linear_path: str = AUTO
    reg: tuple = (1e-8, 1e-8)


def starting_point(qp: QuadraticProgram) -> IpmIterate:
    """Least-squares x on the equalities, y = max(Ax - b, 1), lam = 1, then Mehrotra's shift."""
    n, m, p = qp.n, qp.m, qp.p
    x = np.zeros(n)
    if p:
        # minimum-norm solution of E x = h through [[I, E'], [E, 0]]
        k = _min_norm_matrix(qp)
        sol, _ = ldlt_solve(k, np.concatenate([np.zeros(n), qp.h]), n_primal=n)
        x = sol[:n]
    y = np.maximum(qp.A.matvec(x) - qp.b, 1.0) if m else np.zeros(0)
    lam = np.ones(m)
    if m:
        dy = max(-1.5 * float(y.min()), 0.0)
        dl = max(-1.5 * float(lam.min()), 0.0)
        y, lam = y + dy, lam + dl
        yl = float(y @ lam)
        y = y + 0.5 * yl / float(lam.sum())
        lam = lam + 0.5 * yl / float(y.sum())
    return IpmIterate(x, y, lam, np.zeros(p))


def _min_norm_matrix(qp: QuadraticProgram) -> CscMatrix:
    n, p = qp.n, qp.p
    r, c, v = qp.E.triplets()
    rows = np.concatenate([np.arange(n), r + n])
    cols = np.concatenate([np.arange(n), c])
    vals = np.concatenate([np.ones(n), v])
    return CscMatrix.from_triplets(rows, cols, vals, n + p, n + p)


def _step(it: IpmIterate, dirn, alpha_p: float, alpha_d: float) -> IpmIterate:
    return IpmIterate(
        it.x + alpha_p * dirn.dx,
        it.y + alpha_p * dirn.dy,
        it.lam + alpha_d * dirn.dlam,
        it.nu + alpha_d * dirn.dnu,
    )


def step_lengths(it: IpmIterate, dirn) -> tuple[float, float]:
    ap = min(1.0, STEP_FRACTION * max_step(it.y, dirn.dy))
    ad = min(1.0, STEP_FRACTION * max_step(it.lam, dirn.dlam))
    return ap, ad


def mehrotra_step(qp: QuadraticProgram, it: IpmIterate, system: KktSystem | None = None):
    """One predictor-corrector iteration; returns ``(next_iterate, info)``.

    A single factorization serves both the affine and the corrected solve.
    """
    if not it.is_interior():
        raise ContractError("iterate must be strictly interior (y, lam > 0)")
    kkt = system if system is not None else KktSystem(qp)
    res = residuals(qp, it)
    kkt.factor(it)
    aff = kkt.solve(it, res, it.y * it.lam)
    mu = it.mu
    if qp.m:
        ap = min(1.0, max_step(it.y, aff.dy))
        ad = min(1.0, max_step(it.lam, aff.dlam))
        mu_aff = float((it.y + ap * aff.dy) @ (it.lam + ad * aff.dlam)) / qp.m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
    else:
        sigma = 0.0
    dirn = kkt.solve(it, res, corrector_rhs(it, aff, sigma))
    alpha_p, alpha_d = step_lengths(it, dirn)
    nxt = _step(it, dirn, alpha_p, alpha_d)
    return nxt, {"sigma": sigma, "alpha_p": alpha_p, "alpha_d": alpha_d}


def solve_qp(qp: QuadraticProgram, opts: IpmOptions | None = None, trace_file=None,
             start: IpmIterate | None = None, **kw) -> IpmSolution:
    """Solve ``qp`` to scaled residuals ``<= tol``.

    Keyword overrides ``tol``, ``max_iter``, ``linear_path`` and ``reg`` are
    accepted in place of an :class:`IpmOptions`.  ``trace_file`` receives one
    JSON object per iteration.
    """
    opts = IpmOptions(**{**(opts.__dict__ if opts else {}), **kw})
    stats = SolveStats()
    trace: list[dict] = []
    t0 = time.perf_counter()
    try:
        kkt = KktSystem(qp, opts.linear_path, reg=opts.reg, stats=stats)
        it = start if start is not None else starting_point(qp)
    except NearSingularError as exc:
        it = start or IpmIterate(np.zeros(qp.n), np.ones(qp.m), np.ones(qp.m), np.zeros(qp.p))
        return _finish(qp, it, NEAR_SINGULAR, 0, trace, stats, str(exc))

    status, message = MAX_ITERATIONS, ""
    worse = 0
    prev = np.inf
    k = 0
    for k in range(opts.max_iter + 1):
        scaled = scaled_residuals(qp, it)
        merit = max(scaled[:3])
        rec = {"iter": k, "mu": scaled[3], "r_d": scaled[0], "r_p": scaled[1], "r_e": scaled[2],
               "factor_ops": stats.factor_ops, "time": time.perf_counter() - t0}
        if max(scaled) <= opts.tol:
            trace.append(rec)
            _emit(trace_file, rec)
            status = OPTIMAL
            break
        if k == opts.max_iter:
            trace.append(rec)
            _emit(trace_file, rec)
            break
        worse = worse + 1 if merit > prev * (1 + 1e-12) else 0
        prev = merit
        if worse >= DIVERGENCE_WINDOW:
            status, message = INFEASIBLE, f"residuals grew for {DIVERGENCE_WINDOW} consecutive iterations"
            trace.append(rec)
            _emit(trace_file, rec)
            break
        try:
            nxt, info = mehrotra_step(qp, it, kkt)
        except NearSingularError as exc:
            status, message = NEAR_SINGULAR, str(exc)
            trace.append(rec)
            _emit(trace_file, rec)
            break
        rec.update(info)
        trace.append(rec)
        _emit(trace_file, rec)
        if not all(np.all(np.isfinite(v)) for v in (nxt.x, nxt.y, nxt.lam, nxt.nu)):
            status, message = NEAR_SINGULAR, "non-finite direction"
            break
        if min(info["alpha_p"], info["alpha_d"]) < MIN_STEP:
            status, message = INFEASIBLE, "step length underflow (stall)"
            it = nxt
            break
        if not nxt.is_interior():
            # a slack or dual underflowed to zero: rows that cannot be met
            status, message = INFEASIBLE, "iterate lost strict interiority (underflow)"
            break
        it = nxt
        big = max(np.max(np.abs(it.x), initial=0.0), np.max(it.lam, initial=0.0),
                  np.max(np.abs(it.nu), initial=0.0))
        if big > BLOWUP:
            status, message = INFEASIBLE, "iterates diverging (likely infeasible)"
            break
    return _finish(qp, it, status, k, trace, stats, message)


def _finish(qp, it, status, k, trace, stats, message) -> IpmSolution:
    scaled = scaled_residuals(qp, it)
    return IpmSolution(
        iterate=it, status=status, iterations=k, residuals=scaled, trace=trace,
        objective=qp.objective(it.x), stats=stats, message=message)


def _emit(sink, rec: dict) -> None:
    if sink is None:
        return
    if callable(sink):
        sink(rec)
    else:
        sink.write(json.dumps(rec) + "\n")
