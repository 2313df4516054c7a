"""Numba kernels for dense GF(2^n) linear algebra.

All kernels take the field as a pair of tables: ``log`` (int32, ``log[0]``
unused) and ``exp`` (antilog repeated twice, same dtype as the data), plus
``inv`` where division is needed. Matrices are C-contiguous uint8/uint16.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def gmul(a, b, log, exp):
    if a == 0 or b == 0:
        return exp[0] * 0
    return exp[log[a] + log[b]]


@njit(cache=True)
def matmul(A, B, log, exp):
    rows, inner = A.shape
    cols = B.shape[1]
    C = np.zeros((rows, cols), dtype=A.dtype)
    for i in range(rows):
        for k in range(inner):
            a = A[i, k]
            if a == 0:
                continue
            la = log[a]
            for j in range(cols):
                b = B[k, j]
                if b != 0:
                    C[i, j] ^= exp[la + log[b]]
    return C


@njit(cache=True)
def scale_row_xor(M, dst, src, c, start, log, exp):
    """M[dst, start:] ^= c * M[src, start:]."""
    lc = log[c]
    for j in range(start, M.shape[1]):
        v = M[src, j]
        if v != 0:
            M[dst, j] ^= exp[lc + log[v]]


@njit(cache=True)
def rref_inplace(M, T, use_t, ncols, log, exp, inv):
    """Reduce ``M`` to reduced row echelon form, pivoting in ``[0, ncols)``.

    Row operations are mirrored on ``T`` when ``use_t`` is set. Returns the
    pivot columns (length = rank).
    """
    rows = M.shape[0]
    pivots = np.empty(min(rows, ncols), dtype=np.int64)
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        p = -1
        for i in range(r, rows):
            if M[i, c] != 0:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(M.shape[1]):
                tmp = M[p, j]
                M[p, j] = M[r, j]
                M[r, j] = tmp
            if use_t:
                for j in range(T.shape[1]):
                    tmp = T[p, j]
                    T[p, j] = T[r, j]
                    T[r, j] = tmp
        piv = M[r, c]
        if piv != 1:
            iv = inv[piv]
            liv = log[iv]
            for j in range(c, M.shape[1]):
                v = M[r, j]
                if v != 0:
                    M[r, j] = exp[liv + log[v]]
            if use_t:
                for j in range(T.shape[1]):
                    v = T[r, j]
                    if v != 0:
                        T[r, j] = exp[liv + log[v]]
        for i in range(rows):
            if i != r:
                f = M[i, c]
                if f != 0:
                    scale_row_xor(M, i, r, f, c, log, exp)
                    if use_t:
                        scale_row_xor(T, i, r, f, 0, log, exp)
        pivots[r] = c
        r += 1
    return pivots[:r]


@njit(cache=True)
def rank_inplace(M, log, exp, inv):
    """Forward elimination only; destroys ``M``."""
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = -1
        for i in range(r, rows):
            if M[i, c] != 0:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(c, cols):
                tmp = M[p, j]
                M[p, j] = M[r, j]
                M[r, j] = tmp
        liv = log[inv[M[r, c]]]
        for i in range(r + 1, rows):
            f = M[i, c]
            if f != 0:
                lf = log[exp[log[f] + liv]]
                for j in range(c, cols):
                    v = M[r, j]
                    if v != 0:
                        M[i, j] ^= exp[lf + log[v]]
        r += 1
    return r


@njit(cache=True)
def rank_many(stack, log, exp, inv):
    """Ranks of a stack of equally-shaped matrices (copied, not destroyed)."""
    out = np.empty(stack.shape[0], dtype=np.int64)
    for t in range(stack.shape[0]):
        out[t] = rank_inplace(stack[t].copy(), log, exp, inv)
    return out
