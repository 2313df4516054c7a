"""Full-rank probabilities, rank-deficiency bounds and decoding experiments."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .channel import transfer_matrices
from .code_construct import PRESETS, BaseGraph, build_base_graph, build_generators, cs_plan
from .codec import Batch, CodeParams
from .decoder import bp_decode, build_system, inactivation_decode
from .gf_matrix import Exhausted, InvalidBound, mat_mul, ranks

__all__ = [
    "InvalidShape",
    "zeta",
    "RankBoundQuery",
    "deletion_bound",
    "mc_full_rank_after_deletion",
    "LABELS",
    "label_name",
    "ExperimentConfig",
    "CurvePoint",
    "trial_rates",
    "run_experiment",
    "curves_to_csv",
]


class InvalidShape(ValueError):
    pass


def zeta(m: int, r: int, u, exact: bool = False):
    """Probability that a uniform m x r matrix over GF(u) has rank r.

    For a subset of size ``u`` containing 0 the same product is a lower
    bound. ``exact=True`` returns a :class:`~fractions.Fraction`.
    """
    if not 0 < r <= m:
        raise InvalidShape(f"need 0 < r <= m, got m={m}, r={r}")
    if u < 2:
        raise InvalidShape(f"subset size u={u} must be >= 2")
    if exact:
        out = Fraction(1)
        for j in range(r):
            out *= 1 - Fraction(1, u ** (m - j))
        return out
    return math.prod(1.0 - float(u) ** (-m + j) for j in range(r))


@dataclass(frozen=True)
class RankBoundQuery:
    M: int
    dg: int
    u: int
    deletions: int = 1

    def __post_init__(self):
        if self.u < 2:
            raise InvalidShape("u must be >= 2")
        if self.deletions not in (0, 1, 2):
            raise InvalidShape("only 0, 1 or 2 deletions are supported")
        if self.dg < 1 or self.M <= self.deletions:
            raise InvalidShape(f"bad shape dg={self.dg}, M={self.M}")


def deletion_bound(q: RankBoundQuery) -> float:
    """Lower bound on P(G stays full rank after deleting columns | G full rank).

    One deletion: ``(1 - u^(dg-M)) / (1 - u^-M)`` for ``dg < M``.
    Two deletions: ``prod_{k=0,1} (1 - u^(dg-M+k)) / (1 - u^(-M+k))`` for
    ``dg < M - 1``. Whenever ``dg >= M`` the columns of G are independent
    and the probability is exactly 1.

    For two deletions with ``dg = M - 1`` neither certainty nor the product
    form holds; there the bound is ``P(C) + P(A) - 1`` with both terms
    replaced by their ``zeta`` lower bounds (clamped at 0).
    """
    M, dg, u, d = q.M, q.dg, float(q.u), q.deletions
    if d == 0 or dg >= M:
        return 1.0
    if d == 1:
        return (1.0 - u ** (dg - M)) / (1.0 - u ** (-M))
    if dg < M - 1:
        num = (1.0 - u ** (dg - M)) * (1.0 - u ** (dg - M + 1))
        den = (1.0 - u ** (-M)) * (1.0 - u ** (-M + 1))
        return num / den
    return max(0.0, zeta(M - 1, M - 2, q.u) + zeta(M, M - 1, q.u) - 1.0)


class Estimate(NamedTuple):
    value: float
    stderr: float
    trials: int


def mc_full_rank_after_deletion(q: RankBoundQuery, trials: int, rng: np.random.Generator,
                                max_tries: int = 1000, chunk: int = 4096) -> Estimate:
    """Monte-Carlo counterpart of :func:`deletion_bound`.

    Draws full-rank ``dg x M`` matrices over ``[0, u)`` by rejection, deletes
    ``deletions`` distinct columns chosen uniformly, and reports the fraction
    that is still full rank together with its binomial standard error.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if q.u & (q.u - 1) or q.u > 256:
        raise InvalidBound(f"u={q.u} is not a bounded-value subset size of GF(2^8)")
    dg, M, d = q.dg, q.M, q.deletions
    keep = []
    drawn = 0
    need = trials
    while need > 0:
        if drawn >= trials * max_tries:
            raise Exhausted(f"rejection sampling failed for dg={dg}, M={M}, u={q.u}")
        size = max(min(chunk, 2 * need), 16)
        cand = rng.integers(0, q.u, size=(size, dg, M), dtype=np.uint8)
        drawn += size
        full = cand[ranks(cand) == min(dg, M)][:need]
        keep.append(full)
        need -= len(full)
    G = np.concatenate(keep)
    if d:
        order = np.argsort(rng.random((trials, M)), axis=1)
        cols = np.sort(order[:, d:], axis=1)
        G = np.take_along_axis(G, cols[:, None, :], axis=2)
    ok = ranks(G) == min(dg, M - d)
    p = float(ok.mean())
    return Estimate(p, math.sqrt(p * (1 - p) / trials), trials)


# --- decoding-rate experiments ----------------------------------------------

LABELS = {"gf256": 8, "l16": 4, "l4": 2, "l2": 1}


def label_name(s: int, n: int = 8) -> str:
    return f"GF(2^{n})" if s == n else f"L(2^{s})"


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep of Experiment 1 (x = hops) or Experiment 2 (x = batches)."""

    experiment: int = 1
    params: CodeParams = field(default_factory=CodeParams)
    preset: str = "paper-sim"
    placement: str = "evenly_spaced"
    labels: tuple = (8, 4, 2, 1)
    hops: tuple = tuple(range(1, 11))
    batches: tuple = (20,)
    loss_p: float = 0.1
    recode: bool = True
    direction: str = "right"
    trials: int = 500
    seed: int = 0
    decoders: tuple = ("bp", "inactivation")
    payload: bool = False

    def __post_init__(self):
        if self.experiment not in (1, 2):
            raise ValueError("experiment must be 1 or 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.experiment == 1 and len(self.batches) != 1:
            raise ValueError("experiment 1 sweeps hops at a single batch count")
        if self.experiment == 2 and len(self.hops) != 1:
            raise ValueError("experiment 2 sweeps batches at a single hop count")
        for dec in self.decoders:
            if dec not in _DECODERS:
                raise ValueError(f"unknown decoder {dec!r}")

    @classmethod
    def experiment2(cls, **kw) -> "ExperimentConfig":
        kw.setdefault("hops", (10,))
        kw.setdefault("batches", tuple(range(10, 61, 5)))
        return cls(experiment=2, **kw)

    @property
    def xs(self) -> tuple:
        return self.hops if self.experiment == 1 else self.batches

    def base_graph(self) -> BaseGraph:
        return build_base_graph(self.params.K, PRESETS[self.preset], self.placement, self.seed)


@dataclass(frozen=True)
class CurvePoint:
    experiment: int
    decoder: str
    label: str
    x: int
    rate: float
    stderr: float
    trials: int
    seed: int


_DECODERS = {"bp": bp_decode, "inactivation": inactivation_decode}
_CHANNEL, _GENERATORS, _PAYLOAD = 1, 2, 3


def _trial(cfg: ExperimentConfig, base: BaseGraph, t: int) -> np.ndarray:
    """Rates of one trial, shape (decoders, labels, xs).

    Random streams are keyed by (seed ^ trial, purpose, index): the channel
    of batch i is shared by every label and sweep point, so curves differ
    only through the generators (common random numbers).
    """
    p = cfg.params
    spec = p.spec
    tseed = cfg.seed ^ t
    n_batches = max(cfg.batches)
    max_hops = max(cfg.hops)
    Hs = [transfer_matrices(p.M, max_hops, cfg.loss_p, cfg.recode,
                            np.random.default_rng([tseed, _CHANNEL, i]), spec)
          for i in range(n_batches)]
    plans = [cs_plan(base, i, cfg.direction) for i in range(n_batches)]
    store = None
    if cfg.payload:
        store = np.random.default_rng([tseed, _PAYLOAD]).integers(
            0, spec.q, size=(p.pk, p.K), dtype=spec.dtype)
    out = np.zeros((len(cfg.decoders), len(cfg.labels), len(cfg.xs)))
    empty = np.zeros((0, p.M), dtype=spec.dtype)
    for li, s in enumerate(cfg.labels):
        gens = build_generators(base, p.M, s, np.random.default_rng([tseed, _GENERATORS, s]), spec)
        X = None
        if store is not None:
            X = [mat_mul(store[:, list(pl.columns)], gens[pl.row], spec) for pl in plans]
        for xi, x in enumerate(cfg.xs):
            h, N = (x, n_batches) if cfg.experiment == 1 else (max_hops, x)
            batches = []
            for i in range(N):
                H = Hs[i][h - 1]
                Y = empty if X is None else mat_mul(X[i], H, spec)
                pl = plans[i]
                batches.append(Batch(batch_id=i, X=Y, G=gens[pl.row], H=H, s=s, row=pl.row,
                                     shift=pl.shift, direction=cfg.direction, columns=pl.columns))
            system = build_system(batches, p.K, spec, payload=cfg.payload)
            for di, dec in enumerate(cfg.decoders):
                res = _DECODERS[dec](system, p.K, spec)
                if store is not None:
                    ok = res.recovered
                    if not np.array_equal(res.packets[:, ok], store[:, ok]):
                        raise AssertionError(f"trial {t}: decoder {dec} returned wrong packets")
                out[di, li, xi] = res.decoding_rate
    return out


def _trial_chunk(args):
    cfg, ts = args
    base = cfg.base_graph()
    return np.stack([_trial(cfg, base, t) for t in ts])


def trial_rates(cfg: ExperimentConfig, jobs: int = 1) -> np.ndarray:
    """Per-trial decoding rates, shape (trials, decoders, labels, xs)."""
    ts = list(range(cfg.trials))
    if jobs <= 1:
        return _trial_chunk((cfg, ts))
    chunks = [ts[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_trial_chunk, [(cfg, c) for c in chunks if c]))
    out = np.empty((cfg.trials,) + parts[0].shape[1:])
    for c, part in zip(chunks, parts):
        out[c] = part
    return out


def summarize(cfg: ExperimentConfig, rates: np.ndarray) -> list:
    n = rates.shape[0]
    points = []
    for di, dec in enumerate(cfg.decoders):
        for li, s in enumerate(cfg.labels):
            for xi, x in enumerate(cfg.xs):
                p = float(rates[:, di, li, xi].mean())
                points.append(CurvePoint(cfg.experiment, dec, label_name(s, cfg.params.spec.n),
                                         int(x), p, math.sqrt(max(p * (1 - p), 0.0) / n),
                                         n, cfg.seed))
    return points


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Mean decoding rate (fraction of the K packets recovered) per sweep
    point, label and decoder. The standard error is the sample-proportion
    one, ``sqrt(p (1 - p) / trials)``."""
    return summarize(cfg, trial_rates(cfg, jobs))


CSV_FIELDS = ("experiment", "decoder", "label", "x", "rate", "stderr", "trials", "seed")


def curves_to_csv(points: Iterable[CurvePoint], header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for pt in points:
        d = asdict(pt)
        d["rate"] = f"{pt.rate:.6f}"
        d["stderr"] = f"{pt.stderr:.6f}"
        w.writerow([d[k] for k in CSV_FIELDS])
    return buf.getvalue()
