"""Arithmetic in GF(2^n) with a polynomial basis.

Three multiplication strategies are provided and are value-equivalent:

* ``gf_mul_shift``   -- shift / reduce / accumulate over the n bits of ``b``
* ``gf_mul_table``   -- two log look-ups and one antilog look-up
* ``gf_mul_bounded`` -- the shift loop truncated to the low ``s`` bits of ``b``

Elements are plain integers in ``[0, 2**n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "FieldSpec",
    "LogTables",
    "GateCost",
    "NotPrimitive",
    "DEFAULT_POLY",
    "DEFAULT_FIELD",
    "gf_add",
    "gf_mul_shift",
    "gf_mul_table",
    "gf_mul_bounded",
    "gf_inv",
    "build_log_tables",
    "tables_for",
    "mul_shift_array",
    "mul_bounded_array",
    "mul_table_array",
    "mac_gate_cost",
]

# x^8 + x^4 + x^3 + x^2 + 1
DEFAULT_POLY = 0b1_0001_1101


class NotPrimitive(ValueError):
    """The candidate generator does not have multiplicative order 2^n - 1."""


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^n) parameters: width, reduction polynomial, table generator."""

    n: int = 8
    poly: int = DEFAULT_POLY
    generator: int = 2

    def __post_init__(self):
        if self.n < 1 or self.n > 16:
            raise ValueError(f"field width must be in [1, 16], got {self.n}")
        if self.poly >> self.n != 1 or not self.poly & 1:
            raise ValueError(
                f"poly {self.poly:#x} must have degree exactly {self.n} and constant term 1"
            )
        if not 0 < self.generator < (1 << self.n):
            raise ValueError(f"generator {self.generator} outside the field")

    @property
    def q(self) -> int:
        return 1 << self.n

    @property
    def dtype(self):
        return np.uint8 if self.n <= 8 else np.uint16


DEFAULT_FIELD = FieldSpec()


@dataclass(frozen=True, eq=False)
class LogTables:
    """Discrete log / antilog tables for the nonzero elements.

    ``log[v]`` is defined for ``v`` in ``[1, q)``; ``log[0]`` holds a sentinel
    of -1. ``antilog`` has length ``q - 1``. ``exp`` is ``antilog`` repeated
    twice so that ``exp[log[a] + log[b]]`` needs no modulo, and ``inv`` maps
    each nonzero element to its inverse (``inv[0] = 0``).
    """

    spec: FieldSpec
    log: np.ndarray
    antilog: np.ndarray
    exp: np.ndarray = field(repr=False)
    inv: np.ndarray = field(repr=False)


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul_shift(a: int, b: int, spec: FieldSpec = DEFAULT_FIELD) -> int:
    """Multiply with the n-iteration shift-and-reduce loop."""
    n, poly = spec.n, spec.poly
    top = 1 << (n - 1)
    reg = 0
    ta = a
    for i in range(n):
        if (b >> i) & 1:
            reg ^= ta
        if ta & top:
            ta = poly ^ (ta << 1)
        else:
            ta <<= 1
    return reg


def gf_mul_bounded(a: int, b: int, s: int, spec: FieldSpec = DEFAULT_FIELD) -> int:
    """Multiply ``a`` by a bounded-value element ``b < 2**s``.

    Only the low ``s`` bits of ``b`` are inspected, so the loop (and the
    hardware chain it models) is ``s`` stages long instead of ``n``.
    """
    if not 1 <= s <= spec.n:
        raise ValueError(f"BV width s={s} must be in [1, {spec.n}]")
    if b >> s:
        raise ValueError(f"{b:#x} is not in L(2^{s})")
    top = 1 << (spec.n - 1)
    reg = 0
    ta = a
    for i in range(s):
        if (b >> i) & 1:
            reg ^= ta
        if ta & top:
            ta = spec.poly ^ (ta << 1)
        else:
            ta <<= 1
    return reg


def build_log_tables(spec: FieldSpec = DEFAULT_FIELD) -> LogTables:
    """Build log/antilog tables by iterating powers of ``spec.generator``.

    Raises
    ------
    NotPrimitive
        If the powers of the generator repeat before all ``2**n - 1``
        nonzero elements are visited.
    """
    order = spec.q - 1
    log = np.full(spec.q, -1, dtype=np.int32)
    antilog = np.zeros(order, dtype=np.int64)
    x = 1
    for e in range(order):
        if log[x] != -1:
            raise NotPrimitive(
                f"generator {spec.generator:#x} has order {e} under poly {spec.poly:#x}"
            )
        log[x] = e
        antilog[e] = x
        x = gf_mul_shift(x, spec.generator, spec)
    if x != 1:
        raise NotPrimitive(f"generator {spec.generator:#x} does not cycle back to 1")
    dt = spec.dtype
    antilog = antilog.astype(dt)
    exp = np.concatenate([antilog, antilog])
    inv = np.zeros(spec.q, dtype=dt)
    inv[1:] = antilog[(order - log[1:]) % order]
    for arr in (log, antilog, exp, inv):
        arr.setflags(write=False)
    return LogTables(spec=spec, log=log, antilog=antilog, exp=exp, inv=inv)


@lru_cache(maxsize=None)
def tables_for(spec: FieldSpec = DEFAULT_FIELD) -> LogTables:
    """Cached tables; falls back to the first primitive generator if needed.

    A polynomial for which no generator is primitive is rejected, which
    also rules out reducible polynomials.
    """
    try:
        return build_log_tables(spec)
    except NotPrimitive:
        pass
    for g in range(2, spec.q):
        try:
            return build_log_tables(FieldSpec(spec.n, spec.poly, g))
        except NotPrimitive:
            continue
    raise NotPrimitive(f"poly {spec.poly:#x} admits no primitive element")


def gf_mul_table(a: int, b: int, tables: Optional[LogTables] = None) -> int:
    t = tables if tables is not None else tables_for(DEFAULT_FIELD)
    if a == 0 or b == 0:
        return 0
    return int(t.exp[t.log[a] + t.log[b]])


def gf_inv(a: int, tables: Optional[LogTables] = None) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse")
    t = tables if tables is not None else tables_for(DEFAULT_FIELD)
    return int(t.inv[a])


# vectorized variants, used for encoding whole packets at once


def mul_shift_array(a, b, spec: FieldSpec = DEFAULT_FIELD, nbits: Optional[int] = None):
    """Broadcasting shift-and-add multiply over numpy arrays.

    ``nbits`` truncates the loop to the low bits of ``b`` (the BV path).
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    nbits = spec.n if nbits is None else nbits
    reg = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.int64)
    ta = a.copy()
    for i in range(nbits):
        reg ^= ta * ((b >> i) & 1)
        ta = (ta << 1) ^ (((ta >> (spec.n - 1)) & 1) * spec.poly)
    return reg.astype(spec.dtype)


def mul_bounded_array(a, b, s: int, spec: FieldSpec = DEFAULT_FIELD):
    b = np.asarray(b)
    if np.any(b >> s):
        raise ValueError(f"operand outside L(2^{s})")
    return mul_shift_array(a, b, spec, nbits=s)


def mul_table_array(a, b, tables: Optional[LogTables] = None):
    t = tables if tables is not None else tables_for(DEFAULT_FIELD)
    a = np.asarray(a)
    b = np.asarray(b)
    out = t.exp[t.log[a].astype(np.int64) + t.log[b]]
    return np.where((a == 0) | (b == 0), 0, out).astype(t.spec.dtype)


class GateCost(NamedTuple):
    per_mac: int
    total: int
    depth: int


def mac_gate_cost(n: int, s: Optional[int] = None, tile_m: int = 8, tile_n: int = 8) -> GateCost:
    """1-bit XOR count of a tile of bit-parallel multiply-accumulate units.

    A full multiplier chain has ``n`` stages of two n-bit XORs (``2n^2``);
    restricting one operand to ``L(2^s)`` leaves ``s`` stages (``2ns``).
    Accumulation adds ``n`` more per MAC. ``depth`` is the chain length.
    """
    stages = n if s is None else s
    if not 1 <= stages <= n:
        raise ValueError(f"BV width s={s} must be in [1, {n}]")
    per_mac = 2 * n * stages + n
    return GateCost(per_mac=per_mac, total=per_mac * tile_m * tile_n, depth=stages)
