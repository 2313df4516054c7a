"""Multihop line network with i.i.d. packet erasures and random recoding.

A batch crosses ``hops`` links. Every link erases each of the M packets
independently with probability ``loss_p``; every intermediate node then
recodes the survivors into M fresh packets with a uniform full-field
matrix. The destination only sees the last link's erasures.

The random draws per link are, in order: the erasure mask, then (if the
link ends at an intermediate node and recoding is on) the recoding matrix.
Simulating ``h`` hops therefore consumes a prefix of the draws used for
``h + 1`` hops from the same generator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels as K_
from .codec import Batch
from .gf_core import DEFAULT_FIELD, FieldSpec, tables_for

__all__ = [
    "ChannelConfig",
    "HopOutcome",
    "erase",
    "apply_mask",
    "recode",
    "simulate_line_network",
    "transfer_matrices",
]


@dataclass(frozen=True)
class ChannelConfig:
    hops: int = 1
    loss_p: float = 0.1
    recode: bool = True

    def __post_init__(self):
        if self.hops < 1:
            raise ValueError("hops must be >= 1")
        if not 0.0 <= self.loss_p < 1.0:
            raise ValueError("loss_p must be in [0, 1)")


@dataclass(frozen=True, eq=False)
class HopOutcome:
    mask: np.ndarray  # True = packet survived this link
    R: Optional[np.ndarray]  # survivors x M recoding matrix, None if not recoded
    H: np.ndarray  # accumulated transfer matrix after this hop


def _mul(A, B, spec):
    t = tables_for(spec)
    return K_.matmul(np.ascontiguousarray(A), np.ascontiguousarray(B), t.log, t.exp)


def apply_mask(batch: Batch, mask: np.ndarray) -> Batch:
    keep = mask.astype(batch.X.dtype)
    return replace(batch, X=batch.X * keep, H=batch.H * keep)


def erase(batch: Batch, loss_p: float, rng: np.random.Generator):
    """Drop each packet with probability ``loss_p``; returns ``(batch, mask)``
    with lost packets zeroed in both the payload and ``H``."""
    mask = rng.random(batch.M) >= loss_p
    return apply_mask(batch, mask), mask


def _recode_matrix(n_survivors: int, M: int, rng, spec):
    return rng.integers(0, spec.q, size=(n_survivors, M), dtype=spec.dtype)


def recode(batch: Batch, mask: np.ndarray, rng: np.random.Generator,
           spec: FieldSpec = DEFAULT_FIELD):
    """Mix the surviving packets into M new ones; returns ``(batch, R)``.

    ``new X = X[:, S] R`` and ``new H = H[:, S] R`` for survivors ``S``.
    """
    S = np.flatnonzero(mask)
    R = _recode_matrix(len(S), batch.M, rng, spec)
    if len(S) == 0:
        z = np.zeros_like
        return replace(batch, X=z(batch.X), H=z(batch.H)), R
    X = _mul(batch.X[:, S], R, spec)
    H = _mul(batch.H[:, S], R, spec)
    return replace(batch, X=X, H=H), R


def simulate_line_network(batch: Batch, cfg: ChannelConfig, rng: np.random.Generator,
                          spec: FieldSpec = DEFAULT_FIELD, trace: Optional[list] = None) -> Batch:
    """Send a batch over ``cfg.hops`` links; returns what the sink receives.

    ``G`` is carried unchanged; the sink learns ``H`` from the coefficient
    header, so it sees ``Y = B (G H)``. Pass a list as ``trace`` to collect
    one :class:`HopOutcome` per link.
    """
    for link in range(cfg.hops):
        batch, mask = erase(batch, cfg.loss_p, rng)
        R = None
        if cfg.recode and link < cfg.hops - 1:
            batch, R = recode(batch, mask, rng, spec)
        if trace is not None:
            trace.append(HopOutcome(mask=mask, R=R, H=batch.H))
    return batch


def transfer_matrices(M: int, max_hops: int, loss_p: float, recode: bool,
                      rng: np.random.Generator, spec: FieldSpec = DEFAULT_FIELD) -> list:
    """End-to-end ``H`` for every hop count ``1 .. max_hops`` in one pass.

    Entry ``h-1`` equals the ``H`` that :func:`simulate_line_network` would
    produce for ``hops=h`` from a generator in the same state.
    """
    out = []
    P = np.eye(M, dtype=spec.dtype)  # transfer up to the current node
    for link in range(max_hops):
        mask = rng.random(M) >= loss_p
        out.append(P * mask.astype(P.dtype))
        if link == max_hops - 1:
            break
        if recode:
            S = np.flatnonzero(mask)
            R = _recode_matrix(len(S), M, rng, spec)
            P = _mul(P[:, S], R, spec) if len(S) else np.zeros_like(P)
        else:
            P = out[-1]
    return out
