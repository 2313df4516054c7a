"""Numba kernels for batch-wise peeling with optional inactivation.

The received batches are flattened into one equation matrix ``E`` of shape
``(rows, K + P)``: columns ``[0, K)`` hold coefficients on the input
packets, the trailing ``P`` columns the received symbols. Rows of batch b
live in ``[bstart[b], bend[b])``. ``mptr/midx`` list each batch's member
packets (CSR), ``vptr/vidx`` the batches each packet belongs to.

Variable status: 0 unknown, 1 solved (``pivot_row`` holds its defining
row, which may still reference inactive variables), 2 inactive.
"""

import numpy as np
from numba import njit

from ._kernels import rank_inplace, rref_inplace


@njit(cache=True)
def _swap_rows(E, a, b):
    for w in range(E.shape[1]):
        t = E[a, w]
        E[a, w] = E[b, w]
        E[b, w] = t


@njit(cache=True)
def _axpy_row(E, dst, src, f, log, exp):
    lf = log[f]
    for w in range(E.shape[1]):
        v = E[src, w]
        if v != 0:
            E[dst, w] ^= exp[lf + log[v]]


@njit(cache=True)
def peel(E, K, bstart, bend, mptr, midx, vptr, vidx, inactivate, log, exp, inv):
    nb = bstart.shape[0]
    R, W = E.shape
    status = np.zeros(K, np.int8)
    pivot_row = np.full(K, -1, np.int64)
    used = np.zeros(R, np.bool_)
    unk = np.empty(nb, np.int64)
    for b in range(nb):
        unk[b] = mptr[b + 1] - mptr[b]
    dirty = np.ones(nb, np.bool_)
    ubuf = np.empty(K, np.int64)
    nzbuf = np.empty(W, np.int64)
    counts = np.zeros(K, np.int64)
    sweeps = 0
    n_inact = 0
    while True:
        progress = True
        while progress:
            progress = False
            sweeps += 1
            for b in range(nb):
                if not dirty[b]:
                    continue
                dirty[b] = False
                if unk[b] == 0:
                    continue
                nu = 0
                for t in range(mptr[b], mptr[b + 1]):
                    v = midx[t]
                    if status[v] == 0:
                        ubuf[nu] = v
                        nu += 1
                r0 = bstart[b]
                r1 = bend[b]
                if r1 - r0 < nu:
                    continue
                S = np.empty((r1 - r0, nu), E.dtype)
                for i in range(r1 - r0):
                    for j in range(nu):
                        S[i, j] = E[r0 + i, ubuf[j]]
                if rank_inplace(S, log, exp, inv) < nu:
                    continue
                # reduced echelon form on the unknown columns, pivots in rows r0..r0+nu-1
                for j in range(nu):
                    c = ubuf[j]
                    r = r0 + j
                    p = r
                    while E[p, c] == 0:
                        p += 1
                    if p != r:
                        _swap_rows(E, p, r)
                    piv = E[r, c]
                    if piv != 1:
                        liv = log[inv[piv]]
                        for w in range(W):
                            x = E[r, w]
                            if x != 0:
                                E[r, w] = exp[liv + log[x]]
                    for i in range(r0, r1):
                        if i != r:
                            f = E[i, c]
                            if f != 0:
                                _axpy_row(E, i, r, f, log, exp)
                for j in range(nu):
                    v = ubuf[j]
                    status[v] = 1
                    pivot_row[v] = r0 + j
                    used[r0 + j] = True
                    for t in range(vptr[v], vptr[v + 1]):
                        unk[vidx[t]] -= 1
                # substitute the solved packets into every other batch holding them
                for j in range(nu):
                    v = ubuf[j]
                    pr = r0 + j
                    nnz = 0
                    for w in range(W):
                        if E[pr, w] != 0:
                            nzbuf[nnz] = w
                            nnz += 1
                    for t in range(vptr[v], vptr[v + 1]):
                        b2 = vidx[t]
                        if b2 == b:
                            continue
                        for i in range(bstart[b2], bend[b2]):
                            f = E[i, v]
                            if f != 0:
                                lf = log[f]
                                for z in range(nnz):
                                    w = nzbuf[z]
                                    E[i, w] ^= exp[lf + log[E[pr, w]]]
                        dirty[b2] = True
                progress = True
        if not inactivate:
            break
        counts[:] = 0
        for b in range(nb):
            if unk[b] > 0:
                for t in range(mptr[b], mptr[b + 1]):
                    v = midx[t]
                    if status[v] == 0:
                        counts[v] += 1
        best = -1
        bestc = 0
        for v in range(K):
            if counts[v] > bestc:
                bestc = counts[v]
                best = v
        if best < 0:
            break
        status[best] = 2
        n_inact += 1
        for t in range(vptr[best], vptr[best + 1]):
            b2 = vidx[t]
            unk[b2] -= 1
            dirty[b2] = True
    return status, pivot_row, used, sweeps, n_inact


@njit(cache=True)
def resolve(E, K, status, pivot_row, used, log, exp, inv):
    """Solve the residual system over the inactive packets.

    Returns ``(recovered, values, inconsistent)``. A packet is recovered iff
    its expression in the inactive packets lies in the row space of the
    residual constraints.
    """
    R, W = E.shape
    P = W - K
    nI = 0
    col_of = np.full(K, -1, np.int64)
    for v in range(K):
        if status[v] == 2:
            col_of[v] = nI
            nI += 1
    inact = np.empty(nI, np.int64)
    for v in range(K):
        if col_of[v] >= 0:
            inact[col_of[v]] = v
    # residual rows: unused rows with no unknown packet left in them
    keep = np.zeros(R, np.bool_)
    nk = 0
    for r in range(R):
        if used[r]:
            continue
        ok = True
        for v in range(K):
            if E[r, v] != 0 and status[v] != 2:
                ok = False
                break
        if ok:
            keep[r] = True
            nk += 1
    A = np.zeros((nk, nI + P), E.dtype)
    i = 0
    for r in range(R):
        if keep[r]:
            for k in range(nI):
                A[i, k] = E[r, inact[k]]
            for p in range(P):
                A[i, nI + p] = E[r, K + p]
            i += 1
    dummy = np.zeros((0, 0), E.dtype)
    piv = rref_inplace(A, dummy, False, nI, log, exp, inv)
    rk = piv.shape[0]
    inconsistent = False
    for i in range(rk, nk):
        for p in range(P):
            if A[i, nI + p] != 0:
                inconsistent = True
    recovered = np.zeros(K, np.bool_)
    values = np.zeros((K, P), E.dtype)
    c = np.empty(nI, E.dtype)
    val = np.empty(P, E.dtype)
    for v in range(K):
        if status[v] == 0:
            continue
        if status[v] == 1:
            pr = pivot_row[v]
            for k in range(nI):
                c[k] = E[pr, inact[k]]
            for p in range(P):
                val[p] = E[pr, K + p]
        else:
            c[:] = 0
            c[col_of[v]] = 1
            val[:] = 0
        for i in range(rk):
            lam = c[piv[i]]
            if lam != 0:
                ll = log[lam]
                for k in range(nI):
                    x = A[i, k]
                    if x != 0:
                        c[k] ^= exp[ll + log[x]]
                for p in range(P):
                    x = A[i, nI + p]
                    if x != 0:
                        val[p] ^= exp[ll + log[x]]
        zero = True
        for k in range(nI):
            if c[k] != 0:
                zero = False
                break
        if zero:
            recovered[v] = True
            values[v, :] = val
    return recovered, values, inconsistent
