from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

from csbats.analysis import (CurvePoint, ExperimentConfig, InvalidShape, RankBoundQuery,
                             curves_to_csv, deletion_bound, label_name,
                             mc_full_rank_after_deletion, run_experiment, summarize, trial_rates,
                             zeta)
from csbats.codec import CodeParams

from _oracles import gf2_rank

GRID_DEGREES = (11, 12, 14, 14)


def exact_two_deletion(M, dg, u):
    """Product form evaluated in exact rationals."""
    out = Fraction(1)
    for k in range(2):
        out *= (1 - Fraction(1, u ** (M - dg - k))) / (1 - Fraction(1, u ** (M - k)))
    return out


def test_zeta_examples():
    assert zeta(2, 2, 2, exact=True) == Fraction(6, 16)
    assert zeta(2, 2, 2) == pytest.approx(0.375)
    assert zeta(16, 16, 2**40) == pytest.approx(1.0)
    with pytest.raises(InvalidShape):
        zeta(2, 3, 2)
    with pytest.raises(InvalidShape):
        zeta(2, 2, 1)


def test_zeta_monotone():
    us = [2, 3, 4, 16, 64, 256]
    for m in range(1, 10):
        for r in range(1, m + 1):
            vals = [zeta(m, r, u, exact=True) for u in us]
            assert all(a < b for a, b in zip(vals, vals[1:]))
        for u in us:
            vals = [zeta(m, r, u, exact=True) for r in range(1, m + 1)]
            assert all(a > b for a, b in zip(vals, vals[1:]))


def test_one_deletion_example():
    q = RankBoundQuery(M=16, dg=14, u=2, deletions=1)
    assert deletion_bound(q) == pytest.approx(0.75 / (1 - 2**-16))
    assert deletion_bound(q) == pytest.approx(0.7500, abs=5e-5)


def test_two_deletion_average():
    per = [deletion_bound(RankBoundQuery(16, dg, 2, 2)) for dg in GRID_DEGREES]
    assert per == pytest.approx([0.90824, 0.82035, 0.375, 0.375], abs=5e-5)
    assert np.mean(per) == pytest.approx(0.6196, abs=5e-4)
    for dg, v in zip(GRID_DEGREES, per):
        assert v == pytest.approx(float(exact_two_deletion(16, dg, 2)), rel=1e-12)


@pytest.mark.parametrize("d", [0, 1, 2])
def test_bound_range_and_certainty(d):
    M = 16
    for u in (2, 4, 16, 256):
        for dg in range(1, 33):
            b = deletion_bound(RankBoundQuery(M, dg, u, d))
            assert 0 <= b <= 1
            if d == 0 or dg >= M:
                assert b == 1.0
            elif u <= 4:
                assert b < 1.0


def test_query_validation():
    with pytest.raises(InvalidShape):
        RankBoundQuery(16, 11, 1)
    with pytest.raises(InvalidShape):
        RankBoundQuery(16, 11, 2, deletions=3)


def exact_conditional(M, dg, d):
    """P(rank stays full after deleting d uniform columns | full rank), GF(2)."""
    hit = Fraction(0)
    n_full = 0
    cols_sets = list(combinations(range(M), M - d))
    for rows in product(range(1 << M), repeat=dg):
        if gf2_rank(list(rows)) != min(dg, M):
            continue
        n_full += 1
        ok = 0
        for keep in cols_sets:
            sub = [sum(((r >> c) & 1) << j for j, c in enumerate(keep)) for r in rows]
            ok += gf2_rank(sub) == min(dg, M - d)
        hit += Fraction(ok, len(cols_sets))
    return hit / n_full


@pytest.mark.parametrize("M,dg,d", [(4, 2, 1), (4, 3, 1), (4, 2, 2), (4, 3, 2), (5, 3, 2)])
def test_bound_below_exact_small_gf2(M, dg, d):
    exact = exact_conditional(M, dg, d)
    assert deletion_bound(RankBoundQuery(M, dg, 2, d)) <= float(exact) + 1e-12
    est = mc_full_rank_after_deletion(RankBoundQuery(M, dg, 2, d), 20000, np.random.default_rng(M * dg + d))
    assert abs(est.value - float(exact)) < 4 * max(est.stderr, 1e-3)


def test_mc_certain_cases(rng):
    for dg in (16, 19, 27):
        est = mc_full_rank_after_deletion(RankBoundQuery(16, dg, 2, 2), 500, rng)
        assert est.value == 1.0 and est.stderr == 0.0


def test_mc_against_bounds(rng):
    q = RankBoundQuery(16, 14, 2, 1)
    est = mc_full_rank_after_deletion(q, 10_000, rng)
    assert est.value >= deletion_bound(q) - 3 * est.stderr
    est = mc_full_rank_after_deletion(RankBoundQuery(16, 11, 256, 1), 10_000, rng)
    assert est.value >= 0.999
    q = RankBoundQuery(16, 15, 2, 2)  # the dg = M-1 case
    est = mc_full_rank_after_deletion(q, 10_000, rng)
    assert est.value >= deletion_bound(q) - 3 * est.stderr


def test_mc_rejects_bad_subset(rng):
    from csbats.gf_matrix import InvalidBound
    with pytest.raises(InvalidBound):
        mc_full_rank_after_deletion(RankBoundQuery(16, 11, 3, 1), 10, rng)


def test_labels():
    assert label_name(8) == "GF(2^8)" and label_name(2) == "L(2^2)"


SMALL = dict(trials=6, hops=(1, 3, 6), seed=11)


def test_experiment_deterministic_and_job_independent():
    cfg = ExperimentConfig(**SMALL)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    c = run_experiment(cfg, jobs=2)
    assert a == b == c
    assert len(a) == 2 * 4 * 3
    assert all(0 <= p.rate <= 1 and p.stderr >= 0 and p.trials == 6 for p in a)


def test_experiment_lossless_sanity():
    cfg = ExperimentConfig(trials=3, hops=(1, 2, 3), batches=(64,), loss_p=0.0, recode=False,
                           labels=(8,))
    assert all(p.rate == 1.0 for p in run_experiment(cfg))


def test_payload_mode_agrees():
    cfg = ExperimentConfig(trials=3, hops=(2, 5), labels=(8, 1), params=CodeParams(pk=8))
    coef = trial_rates(cfg)
    full = trial_rates(ExperimentConfig(trials=3, hops=(2, 5), labels=(8, 1), params=CodeParams(pk=8),
                                        payload=True))
    assert np.array_equal(coef, full)


def test_experiment_monotone_paths():
    """Common random numbers make each trial's curve monotone."""
    cfg = ExperimentConfig(trials=5, hops=tuple(range(1, 11)), seed=2)
    r = trial_rates(cfg)
    assert (np.diff(r[:, 1], axis=-1) <= 1e-12).all()
    cfg2 = ExperimentConfig.experiment2(trials=5, seed=2)
    r2 = trial_rates(cfg2)
    assert (np.diff(r2, axis=-1) >= -1e-12).all()
    assert (r2[:, 1] >= r2[:, 0]).all()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment=3)
    with pytest.raises(ValueError):
        ExperimentConfig(batches=(10, 20))
    with pytest.raises(ValueError):
        ExperimentConfig(decoders=("magic",))
    assert ExperimentConfig.experiment2().xs == tuple(range(10, 61, 5))


def test_csv():
    pts = [CurvePoint(1, "bp", "GF(2^8)", 3, 0.5, 0.01, 10, 7)]
    text = curves_to_csv(pts, ["hello"])
    lines = text.splitlines()
    assert lines[0] == "# hello"
    assert lines[1] == "experiment,decoder,label,x,rate,stderr,trials,seed"
    assert lines[2] == "1,bp,GF(2^8),3,0.500000,0.010000,10,7"


def test_stderr_is_sample_proportion():
    cfg = ExperimentConfig(trials=4, hops=(1,), labels=(8,), decoders=("bp",))
    rates = np.full((4, 1, 1, 1), 0.25)
    (pt,) = summarize(cfg, rates)
    assert pt.stderr == pytest.approx(np.sqrt(0.25 * 0.75 / 4))
