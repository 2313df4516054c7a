"""Base graphs, CS-BATS batch plans, random-BATS plans and generator ROMs."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .gf_core import DEFAULT_FIELD, FieldSpec
from .gf_matrix import random_full_rank, rank

__all__ = [
    "PRESETS",
    "InvalidDegree",
    "InvalidDistribution",
    "BaseGraph",
    "BatchPlan",
    "GeneratorSet",
    "build_base_graph",
    "cs_plan",
    "random_plan",
    "build_generators",
    "default_degree_distribution",
    "read_base_graph",
    "write_base_graph",
    "pack_generators",
    "unpack_generators",
]

# Row-degree lists of the three base graphs in use.
PRESETS = {
    "paper-sim": (11, 12, 14, 14, 19, 20, 27),
    "paper-sched": (11, 12, 14, 14, 16, 19, 20, 27),
    "paper-impl": (11, 12, 14, 14, 19, 20, 27, 32),
}


class InvalidDegree(ValueError):
    pass


class InvalidDistribution(ValueError):
    pass


@dataclass(frozen=True)
class BaseGraph:
    K: int
    rows: tuple  # tuple of tuples, each strictly ascending

    def __post_init__(self):
        for r, cols in enumerate(self.rows):
            if not 1 <= len(cols) <= self.K:
                raise InvalidDegree(f"row {r} has degree {len(cols)} outside [1, {self.K}]")
            if any(b <= a for a, b in zip(cols, cols[1:])):
                raise ValueError(f"row {r} is not strictly ascending")
            if cols[0] < 0 or cols[-1] >= self.K:
                raise ValueError(f"row {r} has a column outside [0, {self.K})")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def degrees(self) -> tuple:
        return tuple(len(r) for r in self.rows)

    @property
    def d_max(self) -> int:
        return max(self.degrees)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.m, self.K), dtype=np.uint8)
        for r, cols in enumerate(self.rows):
            A[r, list(cols)] = 1
        return A


@dataclass(frozen=True)
class BatchPlan:
    """Which input packets feed one batch.

    ``columns`` follows the order of the base row, so ``columns[j]`` is
    weighted by row ``j`` of the row's generator matrix. ``row`` is -1 for
    random-BATS plans.
    """

    batch_id: int
    row: int
    shift: int
    columns: tuple
    direction: str = "right"

    @property
    def degree(self) -> int:
        return len(self.columns)


def build_base_graph(K: int, degrees: Sequence[int], placement: str = "evenly_spaced",
                     seed: int = 0) -> BaseGraph:
    """Deterministic base graph from a degree list.

    ``evenly_spaced`` puts row r's j-th one at ``(floor(j*K/d) + r) mod K``,
    walking forward to the next free column on a collision.
    ``uniform_random`` draws each row without replacement from ``seed``.
    """
    for d in degrees:
        if not 1 <= d <= K:
            raise InvalidDegree(f"degree {d} outside [1, {K}]")
    rows = []
    if placement == "evenly_spaced":
        for r, d in enumerate(degrees):
            taken = set()
            for j in range(d):
                c = (j * K // d + r) % K
                while c in taken:
                    c = (c + 1) % K
                taken.add(c)
            rows.append(tuple(sorted(taken)))
    elif placement == "uniform_random":
        rng = np.random.default_rng(seed)
        for d in degrees:
            rows.append(tuple(sorted(int(c) for c in rng.choice(K, size=d, replace=False))))
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return BaseGraph(K=K, rows=tuple(rows))


def cs_plan(base: BaseGraph, batch_id: int, direction: str = "right") -> BatchPlan:
    """Batch ``i`` uses row ``i mod m`` cyclically shifted ``floor(i/m)`` places."""
    if batch_id < 0:
        raise ValueError("batch_id must be >= 0")
    if direction not in ("right", "left"):
        raise ValueError(f"direction must be 'right' or 'left', got {direction!r}")
    r = batch_id % base.m
    shift = batch_id // base.m
    step = shift if direction == "right" else -shift
    cols = tuple((c + step) % base.K for c in base.rows[r])
    return BatchPlan(batch_id=batch_id, row=r, shift=shift, columns=cols, direction=direction)


def random_plan(K: int, degree_dist: Mapping[int, float], rng: np.random.Generator,
                batch_id: int = 0) -> BatchPlan:
    """Random-BATS plan: sample a degree, then that many distinct packets."""
    degs = np.array(list(degree_dist.keys()), dtype=np.int64)
    probs = np.array(list(degree_dist.values()), dtype=float)
    if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
        raise InvalidDistribution("degree probabilities must be non-negative and sum to 1")
    if np.any(degs < 1) or np.any(degs > K):
        raise InvalidDistribution(f"degrees must lie in [1, {K}]")
    d = int(rng.choice(degs, p=probs / probs.sum()))
    cols = tuple(int(c) for c in rng.choice(K, size=d, replace=False))
    return BatchPlan(batch_id=batch_id, row=-1, shift=0, columns=cols)


def default_degree_distribution(K: int = 256, M: int = 16) -> dict:
    """Stand-in degree table for random BATS.

    Mass is concentrated around ``M`` (a discretized normal with sd M/2 over
    ``[1, 3M]``) with 2% spread uniformly over the tail up to ``K``.
    """
    head = np.arange(1, min(3 * M, K) + 1)
    w = np.exp(-0.5 * ((head - M) / (M / 2)) ** 2)
    w = 0.98 * w / w.sum() if head[-1] < K else w / w.sum()
    dist = {int(d): float(p) for d, p in zip(head, w)}
    tail = np.arange(head[-1] + 1, K + 1)
    for d in tail:
        dist[int(d)] = 0.02 / len(tail)
    return dist


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Fixed per-row generator matrices, as held in the encoder's ROM."""

    matrices: tuple
    M: int
    s: int
    spec: FieldSpec = DEFAULT_FIELD
    degrees: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(G.shape[0] for G in self.matrices))
        for G in self.matrices:
            if G.shape[1] != self.M:
                raise ValueError(f"generator has {G.shape[1]} columns, expected M={self.M}")
            if G.size and int(G.max()) >> self.s:
                raise ValueError(f"generator entry outside L(2^{self.s})")

    def __getitem__(self, r: int) -> np.ndarray:
        return self.matrices[r]

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def rom_bits_full(self) -> int:
        return sum(self.degrees) * self.M * self.spec.n

    @property
    def rom_bytes_full(self) -> int:
        return self.rom_bits_full // 8

    @property
    def rom_bytes_bv(self) -> int:
        return sum(self.degrees) * self.M * self.s // 8


def build_generators(base: BaseGraph, M: int, s: int, rng: np.random.Generator,
                     spec: FieldSpec = DEFAULT_FIELD, max_tries: int = 1000) -> GeneratorSet:
    """One full-rank ``d_r x M`` matrix over ``L(2^s)`` per base-graph row."""
    if not 1 <= s <= spec.n:
        raise ValueError(f"BV width s={s} must be in [1, {spec.n}]")
    mats = tuple(random_full_rank(d, M, 1 << s, rng, max_tries, spec) for d in base.degrees)
    return GeneratorSet(matrices=mats, M=M, s=s, spec=spec)


# --- file formats -----------------------------------------------------------


def write_base_graph(base: BaseGraph, path) -> None:
    lines = [f"{base.K} {base.m}"] + [" ".join(str(c) for c in row) for row in base.rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_base_graph(path) -> BaseGraph:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty base-graph file")
    K, m = (int(x) for x in lines[0].split())
    if len(lines) - 1 != m:
        raise ValueError(f"{path}: header says {m} rows, found {len(lines) - 1}")
    rows = tuple(tuple(int(x) for x in ln.split()) for ln in lines[1:])
    return BaseGraph(K=K, rows=rows)


_ROM_MAGIC = b"BGRM"
_ROM_VERSION = 1


def pack_generators(gens: GeneratorSet) -> bytes:
    """Serialize to the ROM image: header, then per row a u16 degree and the
    ``degree*M`` entries packed ``s`` bits each, LSB first. Each row's bit
    stream is padded to a whole byte."""
    out = bytearray(_ROM_MAGIC)
    out += struct.pack("<BBBHH", _ROM_VERSION, gens.spec.n, gens.s, gens.M, len(gens))
    shifts = np.arange(gens.s, dtype=np.uint16)
    for G in gens.matrices:
        out += struct.pack("<H", G.shape[0])
        bits = ((G.reshape(-1, 1).astype(np.uint16) >> shifts) & 1).astype(np.uint8)
        out += np.packbits(bits.reshape(-1), bitorder="little").tobytes()
    return bytes(out)


def unpack_generators(blob: bytes, spec: Optional[FieldSpec] = None) -> GeneratorSet:
    if blob[:4] != _ROM_MAGIC:
        raise ValueError("not a generator ROM image")
    version, n, s, M, m = struct.unpack_from("<BBBHH", blob, 4)
    if version != _ROM_VERSION:
        raise ValueError(f"unsupported ROM version {version}")
    spec = spec or DEFAULT_FIELD
    if spec.n != n:
        raise ValueError(f"ROM is for n={n}, field has n={spec.n}")
    pos = 11
    weights = (1 << np.arange(s, dtype=np.uint16))
    mats = []
    for _ in range(m):
        (d,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        nbytes = -(-d * M * s // 8)
        bits = np.unpackbits(np.frombuffer(blob, np.uint8, nbytes, pos), bitorder="little")
        pos += nbytes
        vals = bits[: d * M * s].reshape(-1, s).astype(np.uint16) @ weights
        mats.append(vals.astype(spec.dtype).reshape(d, M))
    if pos != len(blob):
        raise ValueError("trailing bytes after ROM image")
    return GeneratorSet(matrices=tuple(mats), M=M, s=s, spec=spec)


def is_full_rank_set(gens: GeneratorSet) -> bool:
    return all(rank(G, gens.spec) == min(G.shape) for G in gens.matrices)
