import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csbats.channel import ChannelConfig, simulate_line_network
from csbats.code_construct import BatchPlan, PRESETS, build_base_graph, build_generators
from csbats.codec import Batch, encode_batch, encode_stream
from csbats.decoder import (DecodeResult, InconsistentSystem, bp_decode, build_system,
                            decoding_rate, global_elimination_oracle, inactivation_decode)
from csbats.gf_matrix import identity, random_full_rank

from _oracles import decodable_set


def make_instance(seed, K=24, n_batches=None, hops=None, loss=None, payload_rows=4):
    r = np.random.default_rng(seed)
    n_batches = n_batches or int(r.integers(1, 10))
    hops = hops or int(r.integers(1, 5))
    loss = float(r.uniform(0, 0.4)) if loss is None else loss
    M = int(r.integers(2, 7))
    s = int(r.choice([1, 2, 4, 8]))
    store = r.integers(0, 256, (payload_rows, K), dtype=np.uint8)
    out = []
    for i in range(n_batches):
        d = int(r.integers(1, min(K, 2 * M) + 1))
        plan = BatchPlan(i, -1, 0, tuple(int(c) for c in r.choice(K, d, replace=False)))
        G = random_full_rank(d, M, 2 ** s, r)
        b = encode_batch(store, plan, G, s=s)
        out.append(simulate_line_network(b, ChannelConfig(hops, loss, True), r))
    return store, out


def equations(batches, K):
    sysm = build_system(batches, K, payload=False)
    return sysm.E[:, :K].tolist()


def test_decoding_rate_examples():
    for n, want in [(256, 1.0), (0, 0.0), (128, 0.5)]:
        rec = np.zeros(256, bool)
        rec[:n] = True
        assert decoding_rate(DecodeResult(rec, None, "x"), 256) == want


def test_no_batches():
    for dec in (bp_decode, inactivation_decode, global_elimination_oracle):
        assert dec([], 10).decoding_rate == 0.0


def test_single_solvable_batch(rng):
    store = rng.integers(0, 256, (5, 10), dtype=np.uint8)
    plan = BatchPlan(0, 0, 0, (2, 5, 7))
    b = encode_batch(store, plan, random_full_rank(3, 4, 256, rng))
    for dec in (bp_decode, inactivation_decode, global_elimination_oracle):
        res = dec([b], 10)
        assert list(res.recovered_indices) == [2, 5, 7]
        assert np.array_equal(res.packets[:, [2, 5, 7]], store[:, [2, 5, 7]])


def two_batch_instance():
    """Two batches of 3 packets over 4 variables, rank 2 each: neither is
    solvable alone, together they determine everything."""
    K = 4
    store = np.arange(8, dtype=np.uint8).reshape(2, 4) * 17 + 3
    G1 = np.array([[1, 0], [0, 1], [1, 1]], np.uint8)
    G2 = np.array([[1, 0], [0, 1], [1, 2]], np.uint8)
    b1 = encode_batch(store, BatchPlan(0, 0, 0, (0, 1, 2)), G1)
    b2 = encode_batch(store, BatchPlan(1, 1, 0, (1, 2, 3)), G2)
    return K, store, [b1, b2]


def test_inactivation_beats_bp_on_constructed_instance():
    K, store, bs = two_batch_instance()
    assert set(decodable_set(equations(bs, K), K)) == {0, 1, 2, 3}
    assert bp_decode(bs, K).decoding_rate == 0.0
    res = inactivation_decode(bs, K)
    assert res.decoding_rate == 1.0 and res.inactivated >= 1
    assert np.array_equal(res.packets, store)


def test_bp_success_means_no_inactivation(rng):
    store = rng.integers(0, 256, (3, 6), dtype=np.uint8)
    bs = [encode_batch(store, BatchPlan(i, i, 0, (2 * i, 2 * i + 1)), random_full_rank(2, 3, 256, rng))
          for i in range(3)]
    a, b = bp_decode(bs, 6), inactivation_decode(bs, 6)
    assert a.decoding_rate == b.decoding_rate == 1.0 and b.inactivated == 0
    assert np.array_equal(a.packets, b.packets)


def test_lossless_full_coverage_rate_one(rng):
    base = build_base_graph(256, PRESETS["paper-sim"])
    gens = build_generators(base, 16, 8, rng)
    store = rng.integers(0, 256, (8, 256), dtype=np.uint8)
    bs = encode_stream(store, base, gens, 64)
    res = global_elimination_oracle(bs, 256)
    assert res.decoding_rate == 1.0 and np.array_equal(res.packets, store)


def test_oracle_matches_reference():
    for seed in range(40):
        store, bs = make_instance(seed, K=12)
        ref = decodable_set(equations(bs, 12), 12)
        assert set(global_elimination_oracle(bs, 12).recovered_indices) == ref


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decoders_against_oracle(seed):
    store, bs = make_instance(seed)
    K = store.shape[1]
    orc = global_elimination_oracle(bs, K)
    bp = bp_decode(bs, K)
    ina = inactivation_decode(bs, K)
    assert set(bp.recovered_indices) <= set(orc.recovered_indices)
    assert np.array_equal(ina.recovered, orc.recovered)
    for res in (bp, ina, orc):
        ok = res.recovered
        assert np.array_equal(res.packets[:, ok], store[:, ok])
        assert not res.packets[:, ~ok].any()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bp_independent_of_scan_order(seed):
    store, bs = make_instance(seed, n_batches=8)
    K = store.shape[1]
    perm = np.random.default_rng(seed).permutation(len(bs))
    relabeled = [Batch(batch_id=int(perm[i]), X=b.X, G=b.G, H=b.H, s=b.s, columns=b.columns)
                 for i, b in enumerate(bs)]
    assert np.array_equal(bp_decode(bs, K).recovered, bp_decode(relabeled, K).recovered)
    assert np.array_equal(inactivation_decode(bs, K).recovered,
                          inactivation_decode(relabeled, K).recovered)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adding_a_batch_never_hurts(seed):
    store, bs = make_instance(seed, n_batches=9)
    K = store.shape[1]
    for dec in (bp_decode, inactivation_decode, global_elimination_oracle):
        prev = np.zeros(K, bool)
        for n in range(1, len(bs) + 1):
            cur = dec(bs[:n], K).recovered
            assert not (prev & ~cur).any()
            prev = cur


def test_prebuilt_system_is_not_consumed(rng):
    store, bs = make_instance(3)
    K = store.shape[1]
    sysm = build_system(bs, K)
    E = sysm.E.copy()
    a = inactivation_decode(sysm, K)
    b = inactivation_decode(sysm, K)
    assert np.array_equal(sysm.E, E) and np.array_equal(a.recovered, b.recovered)


def test_coefficient_only_mode():
    store, bs = make_instance(11)
    K = store.shape[1]
    full = inactivation_decode(bs, K)
    coef = inactivation_decode(bs, K, payload=False)
    assert coef.packets is None and np.array_equal(full.recovered, coef.recovered)


def test_inconsistent_input_detected():
    K, store, bs = two_batch_instance()
    bad = Batch(batch_id=2, X=np.array([[1], [1]], np.uint8), G=np.array([[1]], np.uint8),
                H=identity(1), s=8, columns=(0,))
    for dec in (inactivation_decode, global_elimination_oracle):
        with pytest.raises(InconsistentSystem):
            dec(bs + [bad], K)


def test_bad_columns_rejected():
    K, store, bs = two_batch_instance()
    with pytest.raises(ValueError):
        build_system(bs, 3)
    with pytest.raises(ValueError):
        inactivation_decode(bs, K, policy="random")
