"""Packet segmentation, batch encoding ``X = B G`` and the batch wire format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K_
from .code_construct import BaseGraph, BatchPlan, GeneratorSet, cs_plan
from .gf_core import DEFAULT_FIELD, FieldSpec, tables_for
from .gf_matrix import identity

__all__ = [
    "CodeParams",
    "Batch",
    "PayloadTooLarge",
    "ShapeMismatch",
    "segment_payload",
    "desegment",
    "encode_batch",
    "encode_stream",
    "resolve_columns",
    "write_batch",
    "read_batch",
    "write_stream",
    "read_stream",
]


class PayloadTooLarge(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CodeParams:
    K: int = 256
    pk: int = 256
    M: int = 16
    s: int = 8
    spec: FieldSpec = DEFAULT_FIELD

    def __post_init__(self):
        if min(self.K, self.pk, self.M) < 1:
            raise ValueError("K, pk and M must be >= 1")
        if not 1 <= self.s <= self.spec.n:
            raise ValueError(f"s={self.s} must be in [1, {self.spec.n}]")

    @property
    def F(self) -> int:
        """Payload capacity in bits."""
        return self.K * self.spec.n * self.pk

    @property
    def capacity_bytes(self) -> int:
        return self.F // 8


@dataclass(frozen=True, eq=False)
class Batch:
    """One batch in flight.

    At the source ``X = B G`` and ``H`` is the identity; after the channel,
    ``X`` holds the received payload ``Y = B G H``. Lost packets show up as
    zero columns of ``X`` and ``H``.
    """

    batch_id: int
    X: np.ndarray  # pk x M
    G: np.ndarray  # dg x M
    H: np.ndarray  # M x M
    s: int = 8
    row: int = -1
    shift: int = 0
    direction: str = "right"
    columns: Optional[tuple] = None

    @property
    def degree(self) -> int:
        return self.G.shape[0]

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def pk(self) -> int:
        return self.X.shape[0]


def _require_bytes_field(spec: FieldSpec) -> None:
    if spec.n != 8:
        raise NotImplementedError("byte payloads and the wire format need n = 8")


def segment_payload(data: bytes, params: CodeParams) -> np.ndarray:
    """Split bytes into ``K`` packets of ``pk`` symbols, packet j = column j.

    Packets are filled one after another (column-major); the tail is zero.
    """
    _require_bytes_field(params.spec)
    cap = params.K * params.pk
    if len(data) > cap:
        raise PayloadTooLarge(f"{len(data)} bytes exceed capacity {cap}")
    buf = np.zeros(cap, dtype=np.uint8)
    buf[: len(data)] = np.frombuffer(bytes(data), dtype=np.uint8)
    return np.ascontiguousarray(buf.reshape(params.K, params.pk).T)


def desegment(store: np.ndarray, length: int) -> bytes:
    return np.ascontiguousarray(store.T).reshape(-1)[:length].tobytes()


def _xtime(a: np.ndarray, spec: FieldSpec) -> np.ndarray:
    a = a.astype(np.int64)
    return ((a << 1) ^ (((a >> (spec.n - 1)) & 1) * spec.poly)).astype(spec.dtype)


def _mul_shift_matrix(B: np.ndarray, G: np.ndarray, nbits: int, spec: FieldSpec) -> np.ndarray:
    """``B @ G`` using the shift-and-add multiplier on the low ``nbits`` of G."""
    X = np.zeros((B.shape[0], G.shape[1]), dtype=spec.dtype)
    ta = B
    for i in range(nbits):
        bits = ((G >> i) & 1).astype(spec.dtype)
        for j in np.flatnonzero(bits.any(axis=1)):
            X ^= ta[:, j, None] * bits[j]
        if i + 1 < nbits:
            ta = _xtime(ta, spec)
    return X


def encode_batch(store: np.ndarray, plan: BatchPlan, G: np.ndarray,
                 spec: FieldSpec = DEFAULT_FIELD, s: Optional[int] = None,
                 method: str = "auto") -> Batch:
    """Encode one batch from the packets named by ``plan``.

    ``method`` picks the multiplier: ``"table"`` (log/antilog), ``"shift"``
    (n-bit shift-and-add) or ``"bv"`` (s-bit shift-and-add). ``"auto"`` uses
    ``"bv"`` when ``s < n`` and ``"table"`` otherwise.
    """
    s = spec.n if s is None else s
    G = np.ascontiguousarray(G, dtype=spec.dtype)
    if G.shape[0] != plan.degree:
        raise ShapeMismatch(f"generator has {G.shape[0]} rows, plan degree is {plan.degree}")
    if plan.columns and max(plan.columns) >= store.shape[1]:
        raise ShapeMismatch("plan refers to a packet outside the store")
    B = np.ascontiguousarray(store[:, list(plan.columns)], dtype=spec.dtype)
    if method == "auto":
        method = "bv" if s < spec.n else "table"
    if method == "table":
        t = tables_for(spec)
        X = K_.matmul(B, G, t.log, t.exp)
    elif method == "shift":
        X = _mul_shift_matrix(B, G, spec.n, spec)
    elif method == "bv":
        if G.size and int(G.max()) >> s:
            raise ValueError(f"generator entries outside L(2^{s})")
        X = _mul_shift_matrix(B, G, s, spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Batch(batch_id=plan.batch_id, X=X, G=G, H=identity(G.shape[1], spec), s=s,
                 row=plan.row, shift=plan.shift, direction=plan.direction,
                 columns=plan.columns)


def encode_stream(store: np.ndarray, base: BaseGraph, gens: GeneratorSet, N: int,
                  direction: str = "right", method: str = "auto") -> list:
    """Batches ``0 .. N-1`` of the CS-BATS code defined by ``base``/``gens``."""
    out = []
    for i in range(N):
        plan = cs_plan(base, i, direction)
        out.append(encode_batch(store, plan, gens[plan.row], gens.spec, gens.s, method))
    return out


def resolve_columns(batches: Sequence[Batch], base: BaseGraph) -> list:
    """Attach packet indices to batches read off the wire."""
    out = []
    for b in batches:
        plan = cs_plan(base, b.batch_id, b.direction)
        if plan.degree != b.degree:
            raise ShapeMismatch(f"batch {b.batch_id}: degree {b.degree} != base row {plan.degree}")
        out.append(replace(b, row=plan.row, shift=plan.shift, columns=plan.columns))
    return out


# --- wire format ------------------------------------------------------------

_BATCH_HDR = struct.Struct("<4sBBBHIIHBB")
_STREAM_HDR = struct.Struct("<4sBIQI")
_VERSION = 1
_DIRS = {"right": 0, "left": 1}


def write_batch(batch: Batch, spec: FieldSpec = DEFAULT_FIELD) -> bytes:
    _require_bytes_field(spec)
    hdr = _BATCH_HDR.pack(b"BATB", _VERSION, spec.n, batch.s, batch.M, batch.pk,
                          batch.batch_id, batch.degree, _DIRS[batch.direction], 0)
    return b"".join([
        hdr,
        np.ascontiguousarray(batch.G, dtype=np.uint8).tobytes(),
        np.ascontiguousarray(batch.H, dtype=np.uint8).tobytes(),
        np.ascontiguousarray(batch.X, dtype=np.uint8).tobytes(),
    ])


def read_batch(buf: bytes, offset: int = 0):
    """Parse one batch; returns ``(batch, next_offset)``. Columns are unset."""
    magic, ver, n, s, M, pk, bid, deg, dirc, _ = _BATCH_HDR.unpack_from(buf, offset)
    if magic != b"BATB":
        raise ValueError(f"bad batch magic at offset {offset}")
    if ver != _VERSION or n != 8:
        raise ValueError(f"unsupported batch version {ver} / field width {n}")
    pos = offset + _BATCH_HDR.size
    sizes = (deg * M, M * M, pk * M)
    if pos + sum(sizes) > len(buf):
        raise ValueError("truncated batch")
    arrs = []
    for size, shape in zip(sizes, ((deg, M), (M, M), (pk, M))):
        arrs.append(np.frombuffer(buf, np.uint8, size, pos).reshape(shape).copy())
        pos += size
    G, H, X = arrs
    direction = "left" if dirc == 1 else "right"
    return Batch(batch_id=bid, X=X, G=G, H=H, s=s, direction=direction), pos


def write_stream(batches: Sequence[Batch], K: int, payload_len: int,
                 spec: FieldSpec = DEFAULT_FIELD) -> bytes:
    parts = [_STREAM_HDR.pack(b"BATS", _VERSION, K, payload_len, len(batches))]
    parts += [write_batch(b, spec) for b in batches]
    return b"".join(parts)


def read_stream(buf: bytes):
    """Returns ``(K, payload_len, batches)``."""
    magic, ver, K, payload_len, count = _STREAM_HDR.unpack_from(buf, 0)
    if magic != b"BATS" or ver != _VERSION:
        raise ValueError("not a BATS stream")
    pos = _STREAM_HDR.size
    batches = []
    for _ in range(count):
        b, pos = read_batch(buf, pos)
        batches.append(b)
    if pos != len(buf):
        raise ValueError("trailing bytes after stream")
    return K, payload_len, batches
