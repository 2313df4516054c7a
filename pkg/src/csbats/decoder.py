"""Decoders for received batches.

* :func:`bp_decode` -- belief propagation: solve any batch whose unknown
  members are pinned down by its own equations, substitute, repeat.
* :func:`inactivation_decode` -- BP that, when stuck, treats one packet as
  a known symbol ("inactive") and carries on; the inactive packets are
  solved densely at the end.
* :func:`global_elimination_oracle` -- plain Gaussian elimination over all
  equations; the reference for what is decodable at all.

Each received batch with packets ``columns`` contributes one equation per
nonzero column of ``G' = G H``: ``sum_j G'[j, c] * x[columns[j]] = Y[:, c]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K_
from . import _peel
from .codec import Batch
from .gf_core import DEFAULT_FIELD, FieldSpec, tables_for
from .gf_matrix import row_reduce

__all__ = [
    "InconsistentSystem",
    "DecodeResult",
    "EquationSystem",
    "build_system",
    "bp_decode",
    "inactivation_decode",
    "global_elimination_oracle",
    "decoding_rate",
]


class InconsistentSystem(ValueError):
    """Received symbols contradict each other (corrupted input)."""


@dataclass(eq=False)
class DecodeResult:
    recovered: np.ndarray  # bool mask over the K input packets
    packets: Optional[np.ndarray]  # pk x K, zero where not recovered; None if coefficient-only
    method: str
    rounds: int = 0
    inactivated: int = 0

    @property
    def K(self) -> int:
        return len(self.recovered)

    @property
    def recovered_indices(self) -> np.ndarray:
        return np.flatnonzero(self.recovered)

    @property
    def decoding_rate(self) -> float:
        return decoding_rate(self, self.K)


def decoding_rate(result: DecodeResult, K: int) -> float:
    """Fraction of the ``K`` input packets recovered."""
    return float(np.count_nonzero(result.recovered)) / K if K else 0.0


@dataclass(eq=False)
class EquationSystem:
    E: np.ndarray
    K: int
    bstart: np.ndarray
    bend: np.ndarray
    mptr: np.ndarray
    midx: np.ndarray
    vptr: np.ndarray
    vidx: np.ndarray
    payload: bool
    spec: FieldSpec = field(default=DEFAULT_FIELD)

    def copy(self) -> "EquationSystem":
        out = EquationSystem(**self.__dict__)
        out.E = self.E.copy()
        return out


def build_system(batches: Sequence[Batch], K: int, spec: FieldSpec = DEFAULT_FIELD,
                 payload: bool = True) -> EquationSystem:
    """Flatten batches (ascending ``batch_id``) into one equation matrix.

    With ``payload=False`` only coefficients are kept, which is enough to
    decide which packets are decodable.
    """
    t = tables_for(spec)
    order = sorted(range(len(batches)), key=lambda i: batches[i].batch_id)
    P = batches[0].pk if (payload and batches) else 0
    blocks, bstart, bend, members = [], [], [], []
    row = 0
    for i in order:
        b = batches[i]
        if b.columns is None:
            raise ValueError(f"batch {b.batch_id} has no packet columns attached")
        cols = np.asarray(b.columns, dtype=np.int64)
        if len(cols) != b.degree:
            raise ValueError(f"batch {b.batch_id}: {len(cols)} columns for degree {b.degree}")
        if len(np.unique(cols)) != len(cols) or (len(cols) and (cols.min() < 0 or cols.max() >= K)):
            raise ValueError(f"batch {b.batch_id}: invalid packet columns")
        Gp = K_.matmul(np.ascontiguousarray(b.G, dtype=spec.dtype),
                       np.ascontiguousarray(b.H, dtype=spec.dtype), t.log, t.exp)
        nz = np.flatnonzero(Gp.any(axis=0))
        blk = np.zeros((len(nz), K + P), dtype=spec.dtype)
        blk[:, cols] = Gp[:, nz].T
        if P:
            blk[:, K:] = b.X[:, nz].T
        blocks.append(blk)
        bstart.append(row)
        row += len(nz)
        bend.append(row)
        members.append(cols)
    E = np.concatenate(blocks) if blocks else np.zeros((0, K + P), dtype=spec.dtype)
    mptr = np.zeros(len(members) + 1, dtype=np.int64)
    mptr[1:] = np.cumsum([len(m) for m in members])
    midx = np.concatenate(members) if members else np.zeros(0, dtype=np.int64)
    batch_of = np.repeat(np.arange(len(members)), np.diff(mptr))
    by_var = np.argsort(midx, kind="stable")
    vidx = batch_of[by_var]
    vptr = np.zeros(K + 1, dtype=np.int64)
    vptr[1:] = np.cumsum(np.bincount(midx, minlength=K))
    return EquationSystem(E=np.ascontiguousarray(E), K=K,
                          bstart=np.asarray(bstart, dtype=np.int64),
                          bend=np.asarray(bend, dtype=np.int64),
                          mptr=mptr, midx=midx, vptr=vptr, vidx=vidx,
                          payload=bool(P), spec=spec)


def _as_system(batches, K, spec, payload):
    if isinstance(batches, EquationSystem):
        return batches.copy()
    return build_system(batches, K, spec, payload)


def _peel_decode(system: EquationSystem, inactivate: bool, method: str) -> DecodeResult:
    t = tables_for(system.spec)
    E = system.E
    status, pivot_row, used, sweeps, n_inact = _peel.peel(
        E, system.K, system.bstart, system.bend, system.mptr, system.midx,
        system.vptr, system.vidx, inactivate, t.log, t.exp, t.inv)
    recovered, values, inconsistent = _peel.resolve(
        E, system.K, status, pivot_row, used, t.log, t.exp, t.inv)
    if inconsistent:
        raise InconsistentSystem("received symbols are mutually inconsistent")
    packets = np.ascontiguousarray(values.T) if system.payload else None
    return DecodeResult(recovered=recovered, packets=packets, method=method,
                        rounds=int(sweeps), inactivated=int(n_inact))


def bp_decode(batches, K: int, spec: FieldSpec = DEFAULT_FIELD,
              payload: bool = True) -> DecodeResult:
    """Belief-propagation decoding; batches are scanned by ascending id.

    ``batches`` may also be a prebuilt :class:`EquationSystem` (it is
    copied, not consumed).
    """
    return _peel_decode(_as_system(batches, K, spec, payload), False, "bp")


def inactivation_decode(batches, K: int, spec: FieldSpec = DEFAULT_FIELD,
                        payload: bool = True, policy: str = "max-degree") -> DecodeResult:
    """BP with inactivation.

    On a stall the unknown packet that belongs to the most not-yet-decoded
    batches is inactivated (lowest index on ties). The recovered set equals
    that of full Gaussian elimination.
    """
    if policy != "max-degree":
        raise ValueError(f"unknown inactivation policy {policy!r}")
    return _peel_decode(_as_system(batches, K, spec, payload), True, "inactivation")


def global_elimination_oracle(batches, K: int, spec: FieldSpec = DEFAULT_FIELD,
                              payload: bool = True) -> DecodeResult:
    """Stack every equation and row-reduce once.

    Packet ``j`` counts as recovered iff the unit vector ``e_j`` lies in the
    row space of the stacked coefficients, i.e. some reduced row is exactly
    ``e_j``.
    """
    system = _as_system(batches, K, spec, payload)
    C = system.E[:, :K]
    recovered = np.zeros(K, dtype=bool)
    P = system.E.shape[1] - K
    packets = np.zeros((P, K), dtype=spec.dtype) if system.payload else None
    if C.shape[0]:
        rr = row_reduce(C, spec)
        ech = rr.echelon
        rhs = rr.apply(system.E[:, K:]) if system.payload else None
        if rhs is not None and rhs[rr.rank:].any():
            raise InconsistentSystem("received symbols are mutually inconsistent")
        for i, p in enumerate(rr.pivots):
            if np.count_nonzero(ech[i]) == 1:
                recovered[p] = True
                if rhs is not None:
                    packets[:, p] = rhs[i]
    return DecodeResult(recovered=recovered, packets=packets, method="oracle")
