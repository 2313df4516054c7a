"""Scheduling, output-port and resource models of the encoder accelerator."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

from .code_construct import BaseGraph, GeneratorSet
from .codec import CodeParams
from .gf_core import mac_gate_cost
from .gf_matrix import TileConfig, transaction_count

__all__ = [
    "CuConfig",
    "ScheduleEntry",
    "ScheduleReport",
    "schedule_sequential",
    "schedule_load_balanced",
    "PortSimReport",
    "simulate_output_ports",
    "ResourceReport",
    "resource_report",
    "transaction_count",
]


@dataclass(frozen=True)
class CuConfig:
    """Accelerator shape: compute units, tile, output ports and drain rate.

    ``beta`` is the number of elements one port writes per cycle. Each CU
    owns two output buffers of ``gamma = t_m * M`` elements. ``fill_rate``
    defaults to one ``t_m x t_n`` tile per cycle.
    """

    n_cus: int = 4
    tile: TileConfig = field(default_factory=lambda: TileConfig(port_width_bits=512))
    out_ports: int = 1
    beta: int = 64
    M: int = 16
    pk: int = 256
    fill_rate: Optional[int] = None

    def __post_init__(self):
        if self.n_cus < 1 or self.out_ports < 1 or self.beta < 1:
            raise ValueError("n_cus, out_ports and beta must be >= 1")
        if self.M < 1 or self.pk < 1:
            raise ValueError("M and pk must be >= 1")
        if self.fill_rate is None:
            object.__setattr__(self, "fill_rate", self.tile.t_m * self.tile.t_n)
        if self.fill_rate < 1:
            raise ValueError("fill_rate must be >= 1")

    @property
    def gamma(self) -> int:
        return self.tile.t_m * self.M


# --- CU scheduling -----------------------------------------------------------

@dataclass(frozen=True)
class ScheduleEntry:
    batch_id: int
    row: int
    shift: int
    degree: int
    start: int
    end: int


@dataclass(frozen=True)
class ScheduleReport:
    policy: str
    per_cu: tuple  # tuple of tuples of ScheduleEntry, in execution order

    @property
    def n_cus(self) -> int:
        return len(self.per_cu)

    @property
    def totals(self) -> tuple:
        return tuple(entries[-1].end if entries else 0 for entries in self.per_cu)

    @property
    def makespan(self) -> int:
        return max(self.totals, default=0)

    @property
    def spread(self) -> int:
        return max(self.totals) - min(self.totals) if self.per_cu else 0

    def degrees(self, cu: int) -> tuple:
        return tuple(e.degree for e in self.per_cu[cu])

    def assignment(self) -> dict:
        """batch_id -> cu."""
        return {e.batch_id: cu for cu, entries in enumerate(self.per_cu) for e in entries}

    def to_csv(self, header=()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cu", "slot", "batch_id", "row", "degree", "start_cost", "end_cost"])
        for cu, entries in enumerate(self.per_cu):
            for slot, e in enumerate(entries):
                w.writerow([cu, slot, e.batch_id, e.row, e.degree, e.start, e.end])
        return buf.getvalue()


def _schedule(base: BaseGraph, n_cus: int, N: int, policy: str, overhead: int) -> ScheduleReport:
    if n_cus < 1:
        raise ValueError("n_cus must be >= 1")
    if N < 0 or overhead < 0:
        raise ValueError("N and overhead must be >= 0")
    m, degs = base.m, base.degrees
    queues = [[] for _ in range(n_cus)]
    clock = [0] * n_cus
    for i in range(N):
        row, layer = i % m, i // m
        cu = i % n_cus
        if policy == "load-balanced" and layer % 2:
            # mirror the CU that ran this row one layer earlier
            cu = n_cus - 1 - (i - m) % n_cus
        cost = degs[row] + overhead
        queues[cu].append(ScheduleEntry(i, row, layer % base.K, degs[row], clock[cu], clock[cu] + cost))
        clock[cu] += cost
    return ScheduleReport(policy, tuple(tuple(q) for q in queues))


def schedule_sequential(base: BaseGraph, n_cus: int, N: int, overhead: int = 0) -> ScheduleReport:
    """Batch ``i`` runs on CU ``i mod n_cus``; a batch costs its degree
    (plus a constant ``overhead``)."""
    return _schedule(base, n_cus, N, "sequential", overhead)


def schedule_load_balanced(base: BaseGraph, n_cus: int, N: int, overhead: int = 0) -> ScheduleReport:
    """Like :func:`schedule_sequential`, but on every odd layer of ``m``
    batches the CU order is reversed: a row goes to the mirror image
    (``n_cus - 1 - c``) of the CU ``c`` that ran it in the previous layer, so
    CUs that drew light rows in one layer draw heavy rows in the next. When
    ``n_cus`` divides ``m`` this is plain whole-layer reversal."""
    return _schedule(base, n_cus, N, "load-balanced", overhead)


# --- output port sharing -----------------------------------------------------

@dataclass(frozen=True)
class PortSimReport:
    total_cycles: int
    stalls: tuple
    produced: int
    drained: int
    out_ports: int
    beta: int

    @property
    def total_stalls(self) -> int:
        return sum(self.stalls)

    @property
    def effective_rate(self) -> float:
        """Elements written per cycle, averaged over the run."""
        return self.drained / self.total_cycles if self.total_cycles else 0.0


def simulate_output_ports(cfg: CuConfig, schedule: ScheduleReport) -> PortSimReport:
    """Unit-cycle model of per-CU ping-pong output buffers sharing ports.

    Every CU with work left adds up to ``fill_rate`` elements per cycle to
    its active buffer. A full buffer is handed to the port only once its twin
    has been written out; until then the CU stalls. Each port writes ``beta``
    elements per cycle, visiting its CUs (``cu mod out_ports``) round robin.
    A CU's volume is ``pk * M`` elements per scheduled batch.
    """
    if schedule.n_cus != cfg.n_cus:
        raise ValueError(f"schedule has {schedule.n_cus} CUs, config has {cfg.n_cus}")
    n, gamma, rate, beta = cfg.n_cus, cfg.gamma, cfg.fill_rate, cfg.beta
    remaining = [len(q) * cfg.pk * cfg.M for q in schedule.per_cu]
    produced = sum(remaining)
    fill = [0] * n
    pending = [0] * n
    stalls = [0] * n
    ports = [[cu for cu in range(n) if cu % cfg.out_ports == p] for p in range(cfg.out_ports)]
    pointer = [0] * cfg.out_ports
    drained = 0
    cycles = 0
    while any(remaining) or any(fill) or any(pending):
        cycles += 1
        for p, cus in enumerate(ports):
            for k in range(len(cus)):
                idx = (pointer[p] + k) % len(cus)
                cu = cus[idx]
                if pending[cu]:
                    take = min(beta, pending[cu])
                    pending[cu] -= take
                    drained += take
                    pointer[p] = (idx + 1) % len(cus)
                    break
        for cu in range(n):
            if fill[cu] and (fill[cu] == gamma or not remaining[cu]):
                if pending[cu]:
                    if remaining[cu]:
                        stalls[cu] += 1
                    continue
                pending[cu], fill[cu] = fill[cu], 0
            if remaining[cu]:
                k = min(rate, gamma - fill[cu], remaining[cu])
                fill[cu] += k
                remaining[cu] -= k
    return PortSimReport(cycles, tuple(stalls), produced, drained, cfg.out_ports, beta)


# --- resource report ---------------------------------------------------------

@dataclass(frozen=True)
class ResourceReport:
    rows: tuple  # (metric, value, unit)

    def __getitem__(self, metric: str):
        for name, value, _ in self.rows:
            if name == metric:
                return value
        raise KeyError(metric)

    def to_text(self) -> str:
        width = max(len(r[0]) for r in self.rows)
        return "\n".join(f"{name:<{width}}  {value} {unit}".rstrip() for name, value, unit in self.rows) + "\n"

    def to_csv(self, header=()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value", "unit"])
        w.writerows(self.rows)
        return buf.getvalue()


def resource_report(params: CodeParams, cfg: CuConfig, gens: GeneratorSet) -> ResourceReport:
    n = params.spec.n
    t = cfg.tile
    full = mac_gate_cost(n, None, t.t_m, t.t_n)
    bv = mac_gate_cost(n, gens.s, t.t_m, t.t_n)
    base_tx, dec_tx = transaction_count(params.M, params.pk, t.t_m, t.alpha)
    rows = [
        ("xor_per_mac_full", full.per_mac, "gates"),
        ("xor_total_full", full.total, "gates"),
        ("xor_per_mac_bv", bv.per_mac, "gates"),
        ("xor_total_bv", bv.total, "gates"),
        ("xor_reduction", round(full.total / bv.total, 1), "x"),
        ("mac_depth_full", full.depth, "stages"),
        ("mac_depth_bv", bv.depth, "stages"),
        ("bv_width", gens.s, "bits"),
        ("rom_full", gens.rom_bytes_full, "bytes"),
        ("rom_bv", gens.rom_bytes_bv, "bytes"),
        ("transactions_baseline", base_tx, "fetches"),
        ("transactions_decoupled", dec_tx, "fetches"),
        ("port_width", t.port_width_bits, "bits"),
        ("alpha", t.alpha, "elements"),
        ("n_cus", cfg.n_cus, ""),
        ("out_ports", cfg.out_ports, ""),
        ("gamma", cfg.gamma, "elements"),
    ]
    return ResourceReport(tuple(rows))
