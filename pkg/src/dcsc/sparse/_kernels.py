"""Hot loops of the sparse factorization.

Every kernel exists in two forms: an ``njit`` function written against raw
CSC arrays, and a pure-numpy counterpart used when the numpy backend is
selected.  Dispatchers at the bottom of the module pick one according to
:mod:`dcsc._accel`.  Both forms must agree exactly on structure (orderings,
patterns, counts) and to rounding on values.
"""
from __future__ import annotations

import numpy as np

from .. import _accel
from .._accel import njit

# pivot rules understood by the numeric kernels
PIVOT_QUASIDEFINITE = 0  # fail only on a pivot with |d| <= floor (or non-finite)
# floor and negtol are per-column arrays in factor order
PIVOT_MODIFIED = 1  # floor small pivots, fail on clearly negative ones
PIVOT_STRICT = 2  # fail on any pivot below the floor

# element/variable states used by the ordering kernel
_VAR = 0
_ELEMENT = 1
_DEAD = 2
_DENSE = 3


# ---------------------------------------------------------------------------
# approximate minimum degree
# ---------------------------------------------------------------------------
@njit
def _amd_kernel(n, cp, ri, dense_cut):
    order = np.empty(n, dtype=np.int64)
    if n == 0:
        return order

    status = np.zeros(n, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    for j in range(n):
        for p in range(cp[j], cp[j + 1]):
            if ri[p] != j:
                deg[j] += 1
    for j in range(n):
        if deg[j] > dense_cut:
            status[j] = _DENSE

    # per-node list storage: variables keep [elements | variables],
    # elements keep their member variables
    cap = 2 * cp[n] + 4 * n + 16
    iw = np.empty(cap, dtype=np.int64)
    pe = np.zeros(n, dtype=np.int64)
    ne = np.zeros(n, dtype=np.int64)  # number of adjacent elements
    na = np.zeros(n, dtype=np.int64)  # number of adjacent variables
    esize = np.zeros(n, dtype=np.int64)
    used = 0
    for j in range(n):
        if status[j] == _DENSE:
            continue
        pe[j] = used
        for p in range(cp[j], cp[j + 1]):
            i = ri[p]
            if i != j and status[i] != _DENSE:
                iw[used] = i
                used += 1
        na[j] = used - pe[j]
        deg[j] = na[j]

    # degree buckets (doubly linked lists)
    head = -np.ones(n + 1, dtype=np.int64)
    tail = -np.ones(n + 1, dtype=np.int64)
    nxt = -np.ones(n, dtype=np.int64)
    prv = -np.ones(n, dtype=np.int64)
    nalive = 0
    for j in range(n - 1, -1, -1):
        if status[j] == _VAR:
            nalive += 1
            d = deg[j]
            nxt[j] = head[d]
            if head[d] != -1:
                prv[head[d]] = j
            else:
                tail[d] = j
            head[d] = j

    mark = np.zeros(n, dtype=np.int64)
    wstamp = np.zeros(n, dtype=np.int64)
    wv = np.zeros(n, dtype=np.int64)
    tmp = np.empty(n, dtype=np.int64)
    tag = 0
    mindeg = 0
    k = 0

    while nalive > 0:
        while head[mindeg] == -1:
            mindeg += 1
        p = head[mindeg]
        # unlink p
        h = nxt[p]
        head[mindeg] = h
        if h != -1:
            prv[h] = -1
        else:
            tail[mindeg] = -1
        nxt[p] = -1
        prv[p] = -1
        order[k] = p
        k += 1
        nalive -= 1
        tag += 1
        mark[p] = tag

        # room for the new element
        need = na[p]
        for t in range(pe[p], pe[p] + ne[p]):
            e = iw[t]
            if status[e] == _ELEMENT:
                need += esize[e]
        if used + need > iw.shape[0]:
            grown = np.empty(max(2 * iw.shape[0], used + need + 16), dtype=np.int64)
            grown[:used] = iw[:used]
            iw = grown

        start = used
        for t in range(pe[p], pe[p] + ne[p]):
            e = iw[t]
            if status[e] != _ELEMENT:
                continue
            for s in range(pe[e], pe[e] + esize[e]):
                i = iw[s]
                if status[i] == _VAR and mark[i] != tag:
                    mark[i] = tag
                    iw[used] = i
                    used += 1
            status[e] = _DEAD
        for t in range(pe[p] + ne[p], pe[p] + ne[p] + na[p]):
            i = iw[t]
            if status[i] == _VAR and mark[i] != tag:
                mark[i] = tag
                iw[used] = i
                used += 1
        status[p] = _ELEMENT
        pe[p] = start
        esize[p] = used - start
        lp = esize[p]

        # rewrite adjacency of every variable in the new element
        for s in range(start, start + lp):
            i = iw[s]
            base = pe[i]
            m = 0
            for t in range(base + ne[i], base + ne[i] + na[i]):
                v = iw[t]
                if status[v] == _VAR and mark[v] != tag:
                    tmp[m] = v
                    m += 1
            w = base
            for t in range(base, base + ne[i]):
                e = iw[t]
                if status[e] == _ELEMENT and e != p:
                    iw[w] = e
                    w += 1
            iw[w] = p
            w += 1
            ne[i] = w - base
            for t in range(m):
                iw[w + t] = tmp[t]
            na[i] = m

        # |Le \ Lp| for every element touching the new one
        for s in range(start, start + lp):
            i = iw[s]
            for t in range(pe[i], pe[i] + ne[i]):
                e = iw[t]
                if e == p:
                    continue
                if wstamp[e] != tag:
                    wstamp[e] = tag
                    wv[e] = esize[e]
                wv[e] -= 1

        for s in range(start, start + lp):
            i = iw[s]
            ext = na[i] + lp - 1
            for t in range(pe[i], pe[i] + ne[i]):
                e = iw[t]
                if e != p and status[e] == _ELEMENT:
                    if wv[e] <= 0:
                        # element is a subset of the new one: absorb it
                        status[e] = _DEAD
                    else:
                        ext += wv[e]
            dnew = deg[i] + lp - 1
            if ext < dnew:
                dnew = ext
            if nalive - 1 < dnew:
                dnew = nalive - 1
            if dnew < 0:
                dnew = 0
            # move i to the tail of its new bucket, so that on ties the
            # untouched nodes go first
            d = deg[i]
            if prv[i] != -1:
                nxt[prv[i]] = nxt[i]
            else:
                head[d] = nxt[i]
            if nxt[i] != -1:
                prv[nxt[i]] = prv[i]
            else:
                tail[d] = prv[i]
            deg[i] = dnew
            nxt[i] = -1
            prv[i] = tail[dnew]
            if tail[dnew] != -1:
                nxt[tail[dnew]] = i
            else:
                head[dnew] = i
            tail[dnew] = i
            if dnew < mindeg:
                mindeg = dnew

    for j in range(n):
        if status[j] == _DENSE:
            order[k] = j
            k += 1
    return order


# ---------------------------------------------------------------------------
# symbolic factorization: elimination tree, column counts, L pattern
# ---------------------------------------------------------------------------
@njit
def _symbolic_kernel(n, cp, ri, perm, pinv):
    parent = -np.ones(n, dtype=np.int64)
    flag = -np.ones(n, dtype=np.int64)
    lnz = np.zeros(n, dtype=np.int64)
    for k in range(n):
        flag[k] = k
        j = perm[k]
        for p in range(cp[j], cp[j + 1]):
            i = pinv[ri[p]]
            if i < k:
                while flag[i] != k:
                    if parent[i] == -1:
                        parent[i] = k
                    lnz[i] += 1
                    flag[i] = k
                    i = parent[i]
    lp = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        lp[j + 1] = lp[j] + lnz[j]
    li = np.empty(lp[n], dtype=np.int64)
    fill = lp[:n].copy()
    flag[:] = -1
    for k in range(n):
        flag[k] = k
        j = perm[k]
        for p in range(cp[j], cp[j + 1]):
            i = pinv[ri[p]]
            if i < k:
                while flag[i] != k:
                    li[fill[i]] = k
                    fill[i] += 1
                    flag[i] = k
                    i = parent[i]
    return parent, lp, li


def _symbolic_numpy(n, cp, ri, perm, pinv):
    cols = np.repeat(np.arange(n, dtype=np.int64), np.diff(cp))
    r_new = pinv[ri]
    c_new = pinv[cols]
    low = r_new > c_new
    r_new, c_new = r_new[low], c_new[low]
    order = np.lexsort((r_new, c_new))
    r_new, c_new = r_new[order], c_new[order]
    starts = np.searchsorted(c_new, np.arange(n + 1))
    parent = -np.ones(n, dtype=np.int64)
    children = [[] for _ in range(n)]
    patterns = []
    for k in range(n):
        parts = [r_new[starts[k]:starts[k + 1]]]
        for c in children[k]:
            pc = patterns[c]
            parts.append(pc[pc > k])
        s = np.unique(np.concatenate(parts)) if len(parts) > 1 else np.unique(parts[0])
        patterns.append(s)
        if len(s):
            parent[k] = s[0]
            children[s[0]].append(k)
    lnz = np.array([len(s) for s in patterns], dtype=np.int64)
    lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lnz, out=lp[1:])
    li = np.concatenate(patterns).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
    return parent, lp, li


# ---------------------------------------------------------------------------
# numeric LDL^T (up-looking, Davis' LDL scheme)
# ---------------------------------------------------------------------------
@njit
def _ldl_kernel(n, cp, ri, vx, perm, pinv, parent, lp, reg, mode, floor, negtol):
    li = np.empty(lp[n], dtype=np.int64)
    lx = np.empty(lp[n], dtype=np.float64)
    d = np.zeros(n, dtype=np.float64)
    y = np.zeros(n, dtype=np.float64)
    pattern = np.empty(n, dtype=np.int64)
    flag = -np.ones(n, dtype=np.int64)
    lnz = np.zeros(n, dtype=np.int64)
    nmod = 0
    for k in range(n):
        y[k] = 0.0
        top = n
        flag[k] = k
        lnz[k] = 0
        kk = perm[k]
        for p in range(cp[kk], cp[kk + 1]):
            i = pinv[ri[p]]
            if i <= k:
                y[i] += vx[p]
                ln = 0
                while flag[i] != k:
                    pattern[ln] = i
                    ln += 1
                    flag[i] = k
                    i = parent[i]
                while ln > 0:
                    top -= 1
                    ln -= 1
                    pattern[top] = pattern[ln]
        dk = y[k]
        y[k] = 0.0
        for t in range(top, n):
            i = pattern[t]
            yi = y[i]
            y[i] = 0.0
            p2 = lp[i] + lnz[i]
            for p in range(lp[i], p2):
                y[li[p]] -= lx[p] * yi
            lki = yi / d[i]
            dk -= lki * yi
            li[p2] = k
            lx[p2] = lki
            lnz[i] += 1
        dk += reg[k]
        if not np.isfinite(dk):
            return li, lx, d, k, nmod
        if mode == PIVOT_QUASIDEFINITE:
            if abs(dk) <= floor[k]:
                return li, lx, d, k, nmod
        elif mode == PIVOT_MODIFIED:
            if dk < floor[k]:
                if dk < -negtol[k]:
                    return li, lx, d, k, nmod
                dk = floor[k]
                nmod += 1
        else:
            if dk < floor[k]:
                return li, lx, d, k, nmod
        d[k] = dk
    return li, lx, d, -1, nmod


def _ldl_numpy(n, cp, ri, vx, perm, pinv, parent, lp, li_sym, reg, mode, floor, negtol):
    cols = np.repeat(np.arange(n, dtype=np.int64), np.diff(cp))
    r_new = pinv[ri]
    c_new = pinv[cols]
    low = r_new >= c_new
    r_new, c_new, v_new = r_new[low], c_new[low], vx[low]
    order = np.lexsort((r_new, c_new))
    r_new, c_new, v_new = r_new[order], c_new[order], v_new[order]
    starts = np.searchsorted(c_new, np.arange(n + 1))

    li = li_sym
    lx = np.zeros(lp[n])
    d = np.zeros(n)
    colid = np.repeat(np.arange(n, dtype=np.int64), np.diff(lp))
    by_row = np.argsort(li, kind="stable")
    rowptr = np.searchsorted(li[by_row], np.arange(n + 1))
    first = lp[:n].copy()
    w = np.zeros(n)
    nmod = 0
    for j in range(n):
        seg = slice(starts[j], starts[j + 1])
        np.add.at(w, r_new[seg], v_new[seg])
        ks = colid[by_row[rowptr[j]:rowptr[j + 1]]]
        if len(ks):
            st = first[ks]
            lens = lp[ks + 1] - st
            coef = lx[st] * d[ks]
            total = int(lens.sum())
            offs = np.repeat(st - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
            idx = offs + np.arange(total)
            np.subtract.at(w, li[idx], lx[idx] * np.repeat(coef, lens))
            first[ks] += 1
        dj = w[j] + reg[j]
        w[j] = 0.0
        bad = not np.isfinite(dj)
        if not bad:
            if mode == PIVOT_QUASIDEFINITE:
                bad = abs(dj) <= floor[j]
            elif mode == PIVOT_MODIFIED:
                if dj < floor[j]:
                    if dj < -negtol[j]:
                        bad = True
                    else:
                        dj = floor[j]
                        nmod += 1
            else:
                bad = dj < floor[j]
        if bad:
            return li, lx, d, j, nmod
        d[j] = dj
        rows = li[lp[j]:lp[j + 1]]
        lx[lp[j]:lp[j + 1]] = w[rows] / dj
        w[rows] = 0.0
    return li, lx, d, -1, nmod


# ---------------------------------------------------------------------------
# triangular solves with a unit lower factor stored strictly-lower in CSC
# ---------------------------------------------------------------------------
@njit
def _ldl_solve_kernel(n, lp, li, lx, d, x):
    # x is (n, k) in factor order, overwritten in place
    nrhs = x.shape[1]
    for j in range(n):
        for p in range(lp[j], lp[j + 1]):
            i = li[p]
            l = lx[p]
            for c in range(nrhs):
                x[i, c] -= l * x[j, c]
    for j in range(n):
        dj = d[j]
        for c in range(nrhs):
            x[j, c] /= dj
    for j in range(n - 1, -1, -1):
        for p in range(lp[j], lp[j + 1]):
            i = li[p]
            l = lx[p]
            for c in range(nrhs):
                x[j, c] -= l * x[i, c]
    return x


def _ldl_solve_numpy(n, lp, li, lx, d, x):
    for j in range(n):
        lo, hi = lp[j], lp[j + 1]
        if hi > lo:
            x[li[lo:hi]] -= np.outer(lx[lo:hi], x[j])
    x /= d[:, None]
    for j in range(n - 1, -1, -1):
        lo, hi = lp[j], lp[j + 1]
        if hi > lo:
            x[j] -= lx[lo:hi] @ x[li[lo:hi]]
    return x


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------
def amd_order(n, cp, ri, dense_cut):
    fn = _amd_kernel if _accel.using_numba() else _amd_kernel.py_func
    return fn(np.int64(n), cp, ri, np.int64(dense_cut))


def symbolic(n, cp, ri, perm, pinv):
    if _accel.using_numba():
        return _symbolic_kernel(np.int64(n), cp, ri, perm, pinv)
    return _symbolic_numpy(n, cp, ri, perm, pinv)


def ldl_numeric(n, cp, ri, vx, perm, pinv, parent, lp, li_sym, reg, mode, floor, negtol):
    if _accel.using_numba():
        return _ldl_kernel(np.int64(n), cp, ri, vx, perm, pinv, parent, lp, reg,
                           np.int64(mode), floor, negtol)
    return _ldl_numpy(n, cp, ri, vx, perm, pinv, parent, lp, li_sym, reg, mode, floor, negtol)


def ldl_solve(n, lp, li, lx, d, x):
    if _accel.using_numba():
        return _ldl_solve_kernel(np.int64(n), lp, li, lx, d, x)
    return _ldl_solve_numpy(n, lp, li, lx, d, x)
