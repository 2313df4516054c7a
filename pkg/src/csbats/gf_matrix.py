"""Dense matrices over GF(2^n), stored as 2-D numpy arrays.

Entries are ``uint8`` for n <= 8 (``uint16`` above). Heavy loops run in
numba kernels; everything here is a thin, validating wrapper.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .gf_core import DEFAULT_FIELD, FieldSpec, tables_for

__all__ = [
    "DimensionMismatch",
    "InvalidBound",
    "Exhausted",
    "TileConfig",
    "TransactionCount",
    "RowReduction",
    "as_matrix",
    "identity",
    "mat_mul",
    "mat_mul_tiled",
    "transaction_count",
    "rank",
    "ranks",
    "row_reduce",
    "random_matrix",
    "random_full_rank",
]


class DimensionMismatch(ValueError):
    pass


class InvalidBound(ValueError):
    pass


class Exhausted(RuntimeError):
    """Rejection sampling gave up before finding a full-rank matrix."""


def as_matrix(A, spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {A.shape}")
    if A.size and (A.min() < 0 or A.max() >= spec.q):
        raise ValueError(f"entries outside GF(2^{spec.n})")
    return np.ascontiguousarray(A, dtype=spec.dtype)


def identity(size: int, spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    return np.eye(size, dtype=spec.dtype)


def _tables(spec):
    t = tables_for(spec)
    return t.log, t.exp, t.inv


def mat_mul(A, B, spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    A = as_matrix(A, spec)
    B = as_matrix(B, spec)
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    log, exp, _ = _tables(spec)
    return K.matmul(A, B, log, exp)


@dataclass(frozen=True)
class TileConfig:
    """Tile shape plus the memory-port width that sets the fetch length.

    Each column fetch reads ``t_m + alpha`` contiguous elements, where
    ``alpha = port_width_bits / n - t_m``. Give either ``port_width_bits``
    or ``alpha`` (the other is derived).
    """

    t_m: int = 8
    t_k: int = 8
    t_n: int = 8
    port_width_bits: Optional[int] = None
    n: int = 8
    alpha: Optional[int] = None

    def __post_init__(self):
        if min(self.t_m, self.t_k, self.t_n) < 1:
            raise ValueError("tile dimensions must be >= 1")
        if self.port_width_bits is None:
            a = 0 if self.alpha is None else self.alpha
            object.__setattr__(self, "alpha", a)
            object.__setattr__(self, "port_width_bits", (self.t_m + a) * self.n)
        else:
            derived = self.port_width_bits // self.n - self.t_m
            if self.alpha is not None and self.alpha != derived:
                raise ValueError(f"alpha={self.alpha} disagrees with port width (alpha={derived})")
            object.__setattr__(self, "alpha", derived)
        if self.alpha < 0:
            raise ValueError("port narrower than one tile column (alpha < 0)")

    @property
    def fetch_len(self) -> int:
        return self.t_m + self.alpha


class TransactionCount(NamedTuple):
    baseline: int  # ceil(M*pk / t_m)
    decoupled: int  # ceil(M*pk / (t_m + alpha))
    fetches: int  # column fetches issued by the simulated loader
    hits: int  # column requests already present in the tile buffer


def transaction_count(M: int, pk: int, t_m: int, alpha: int = 0) -> tuple[int, int]:
    if t_m < 1 or alpha < 0:
        raise ValueError("need t_m >= 1 and alpha >= 0")
    return ceil(M * pk / t_m), ceil(M * pk / (t_m + alpha))


def mat_mul_tiled(A, B, cfg: TileConfig, spec: FieldSpec = DEFAULT_FIELD):
    """Row-tiled product ``A @ B`` with a decoupled column loader.

    ``A`` (the tall packet matrix) is walked in blocks of ``t_m`` rows. Each
    requested column slice of height ``t_m`` is served from the tile buffer
    when a previous fetch of ``t_m + alpha`` elements already covers it;
    otherwise one fetch is issued. Rows are zero-padded to a multiple of
    ``t_m`` and the padding is dropped from the result.
    """
    A = as_matrix(A, spec)
    B = as_matrix(B, spec)
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    pk, inner = A.shape
    cols = B.shape[1]
    t_m, t_k, t_n = cfg.t_m, cfg.t_k, cfg.t_n
    padded = -(-pk // t_m) * t_m if pk else 0
    Ap = np.zeros((padded, inner), dtype=A.dtype)
    Ap[:pk] = A
    log, exp, _ = _tables(spec)

    C = np.zeros((padded, cols), dtype=A.dtype)
    window = np.full(inner, -1, dtype=np.int64)  # start row of the buffered slice per column
    fetches = hits = 0
    for r0 in range(0, padded, t_m):
        for k0 in range(0, inner, t_k):
            ks = slice(k0, min(k0 + t_k, inner))
            for k in range(ks.start, ks.stop):
                w = window[k]
                if w >= 0 and w <= r0 and r0 + t_m <= w + cfg.fetch_len:
                    hits += 1
                else:
                    window[k] = r0
                    fetches += 1
            tile = Ap[r0 : r0 + t_m, ks]
            for c0 in range(0, cols, t_n):
                cs = slice(c0, min(c0 + t_n, cols))
                C[r0 : r0 + t_m, cs] ^= K.matmul(
                    np.ascontiguousarray(tile), np.ascontiguousarray(B[ks, cs]), log, exp
                )
    baseline, decoupled = transaction_count(cols, pk, t_m, cfg.alpha)
    return C[:pk], TransactionCount(baseline, decoupled, fetches, hits)


def rank(A, spec: FieldSpec = DEFAULT_FIELD) -> int:
    A = as_matrix(A, spec)
    if A.size == 0:
        return 0
    log, exp, inv = _tables(spec)
    return int(K.rank_inplace(A.copy(), log, exp, inv))


def ranks(stack, spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    """Rank of each matrix in a 3-D stack."""
    stack = np.ascontiguousarray(stack, dtype=spec.dtype)
    if stack.shape[1] == 0 or stack.shape[2] == 0:
        return np.zeros(stack.shape[0], dtype=np.int64)
    log, exp, inv = _tables(spec)
    return K.rank_many(stack, log, exp, inv)


@dataclass(frozen=True)
class RowReduction:
    """Reduced row echelon form ``echelon = transform @ A``.

    ``transform`` is the accumulated (invertible) row-operation record, so
    applying it to a right-hand side yields the matching reduced system.
    """

    echelon: np.ndarray
    pivots: np.ndarray
    transform: np.ndarray
    spec: FieldSpec = DEFAULT_FIELD

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def apply(self, rhs) -> np.ndarray:
        return mat_mul(self.transform, rhs, self.spec)

    def solve(self, rhs) -> np.ndarray:
        """Solve ``A x = rhs`` for a consistent system with full column rank.

        Raises ``ValueError`` for inconsistent or underdetermined systems.
        """
        red = self.apply(rhs)
        r = self.rank
        if np.any(red[r:]):
            raise ValueError("inconsistent system")
        if r != self.echelon.shape[1]:
            raise ValueError("system is underdetermined")
        x = np.zeros((self.echelon.shape[1], red.shape[1]), dtype=red.dtype)
        x[self.pivots] = red[:r]
        return x


def row_reduce(A, spec: FieldSpec = DEFAULT_FIELD) -> RowReduction:
    A = as_matrix(A, spec)
    M = A.copy()
    T = identity(A.shape[0], spec)
    log, exp, inv = _tables(spec)
    pivots = K.rref_inplace(M, T, True, A.shape[1], log, exp, inv)
    return RowReduction(echelon=M, pivots=pivots, transform=T, spec=spec)


def _check_bound(u: int, spec: FieldSpec) -> None:
    if u < 2 or u > spec.q or u & (u - 1):
        raise InvalidBound(f"subset size u={u} must be 2^s with 1 <= s <= {spec.n}")


def random_matrix(rows: int, cols: int, u: int, rng: np.random.Generator,
                  spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    """Entries i.i.d. uniform over the bounded-value subset ``[0, u)``."""
    _check_bound(u, spec)
    return rng.integers(0, u, size=(rows, cols), dtype=spec.dtype)


def random_full_rank(rows: int, cols: int, u: int, rng: np.random.Generator,
                     max_tries: int = 1000, spec: FieldSpec = DEFAULT_FIELD) -> np.ndarray:
    """Rejection-sample a matrix over ``[0, u)`` of rank ``min(rows, cols)``."""
    _check_bound(u, spec)
    target = min(rows, cols)
    for _ in range(max_tries):
        G = random_matrix(rows, cols, u, rng, spec)
        if rank(G, spec) == target:
            return G
    raise Exhausted(f"no full-rank {rows}x{cols} matrix over L({u}) in {max_tries} tries")
