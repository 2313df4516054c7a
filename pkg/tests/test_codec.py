import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csbats.code_construct import PRESETS, build_base_graph, build_generators, cs_plan
from csbats.codec import (Batch, CodeParams, PayloadTooLarge, ShapeMismatch, desegment,
                          encode_batch, encode_stream, read_batch, read_stream, resolve_columns,
                          segment_payload, write_batch, write_stream)
from csbats.gf_core import FieldSpec
from csbats.gf_matrix import identity, mat_mul

SIM = PRESETS["paper-sim"]


@pytest.fixture(scope="module")
def code():
    base = build_base_graph(256, SIM)
    gens = build_generators(base, 16, 8, np.random.default_rng(1))
    bv = build_generators(base, 16, 2, np.random.default_rng(2))
    return base, gens, bv


def test_params():
    p = CodeParams()
    assert p.capacity_bytes == 256 * 256
    with pytest.raises(ValueError):
        CodeParams(s=9)
    with pytest.raises(ValueError):
        CodeParams(K=0)


def test_segment_small():
    p = CodeParams(K=4, pk=3)
    store = segment_payload(b"abcdefg", p)
    assert store.shape == (3, 4)
    assert bytes(store[:, 0]) == b"abc" and bytes(store[:, 1]) == b"def"
    assert store[0, 2] == ord("g") and not store[1:, 2].any() and not store[:, 3].any()
    assert desegment(store, 7) == b"abcdefg"


def test_segment_edges(rng):
    p = CodeParams()
    assert not segment_payload(b"", p).any()
    full = rng.integers(0, 256, p.capacity_bytes, dtype=np.uint8).tobytes()
    assert desegment(segment_payload(full, p), len(full)) == full
    s = segment_payload(b"\xff" * 100, p)
    assert (s[:100, 0] == 255).all() and s.sum() == 255 * 100
    with pytest.raises(PayloadTooLarge):
        segment_payload(bytes(p.capacity_bytes + 1), p)
    with pytest.raises(NotImplementedError):
        segment_payload(b"", CodeParams(spec=FieldSpec(n=4, poly=0b10011), s=2))


def test_encode_batch_zero_store(code):
    base, gens, _ = code
    store = np.zeros((256, 256), np.uint8)
    assert not encode_batch(store, cs_plan(base, 3), gens[3]).X.any()


def test_encode_identity_generator(rng):
    base = build_base_graph(64, (16,))
    store = rng.integers(0, 256, (32, 64), dtype=np.uint8)
    plan = cs_plan(base, 5)
    b = encode_batch(store, plan, identity(16))
    assert np.array_equal(b.X, store[:, list(plan.columns)])
    assert np.array_equal(b.H, identity(16))


@pytest.mark.parametrize("method", ["table", "shift", "auto"])
def test_encode_matches_mat_mul(code, rng, method):
    base, gens, _ = code
    store = rng.integers(0, 256, (256, 256), dtype=np.uint8)
    for i in range(9):
        plan = cs_plan(base, i)
        b = encode_batch(store, plan, gens[plan.row], method=method)
        assert np.array_equal(b.X, mat_mul(store[:, list(plan.columns)], gens[plan.row]))
        assert b.degree == plan.degree and b.columns == plan.columns


def test_bv_path_value_equivalent(code, rng):
    base, _, bv = code
    store = rng.integers(0, 256, (256, 256), dtype=np.uint8)
    plan = cs_plan(base, 4)
    a = encode_batch(store, plan, bv[plan.row], s=2, method="bv")
    b = encode_batch(store, plan, bv[plan.row], s=8, method="table")
    assert np.array_equal(a.X, b.X)
    with pytest.raises(ValueError):
        encode_batch(store, plan, np.full((plan.degree, 16), 7, np.uint8), s=2, method="bv")


def test_encode_shape_errors(code):
    base, gens, _ = code
    store = np.zeros((8, 256), np.uint8)
    with pytest.raises(ShapeMismatch):
        encode_batch(store, cs_plan(base, 0), gens[1])
    with pytest.raises(ShapeMismatch):
        encode_batch(np.zeros((8, 10), np.uint8), cs_plan(base, 0), gens[0])
    with pytest.raises(ValueError):
        encode_batch(store, cs_plan(base, 0), gens[0], method="magic")


def test_encode_stream(code):
    base, gens, _ = code
    store = np.zeros((4, 256), np.uint8)
    assert encode_stream(store, base, gens, 0) == []
    first = encode_stream(store, base, gens, 7)
    assert [b.shift for b in first] == [0] * 7
    twenty = encode_stream(store, base, gens, 20)
    assert [b.degree for b in twenty] == [SIM[i % 7] for i in range(20)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40))
def test_encoding_is_linear(seed, i):
    r = np.random.default_rng(seed)
    base = build_base_graph(64, SIM)
    gens = build_generators(base, 16, 4, r)
    s1 = r.integers(0, 256, (16, 64), dtype=np.uint8)
    s2 = r.integers(0, 256, (16, 64), dtype=np.uint8)
    plan = cs_plan(base, i)
    G = gens[plan.row]
    x1 = encode_batch(s1, plan, G).X
    x2 = encode_batch(s2, plan, G).X
    assert np.array_equal(encode_batch(s1 ^ s2, plan, G).X, x1 ^ x2)


def test_wire_round_trip(code, rng):
    base, gens, _ = code
    store = rng.integers(0, 256, (256, 256), dtype=np.uint8)
    batches = encode_stream(store, base, gens, 10, direction="left")
    for b in batches:
        raw = write_batch(b)
        back, end = read_batch(raw)
        assert end == len(raw) and write_batch(back) == raw
        assert back.direction == "left"
    blob = write_stream(batches, 256, 12345)
    K, length, back = read_stream(blob)
    assert (K, length, len(back)) == (256, 12345, 10)
    back = resolve_columns(back, base)
    assert [b.columns for b in back] == [b.columns for b in batches]
    assert write_stream(back, 256, 12345) == blob


def test_wire_rejects_damage(code):
    base, gens, _ = code
    blob = write_stream(encode_stream(np.zeros((4, 256), np.uint8), base, gens, 2), 256, 0)
    with pytest.raises(ValueError):
        read_stream(blob[:-1])
    with pytest.raises(ValueError):
        read_stream(blob + b"\0")
    with pytest.raises(ValueError):
        read_stream(b"XXXX" + blob[4:])


def test_resolve_columns_degree_check(code):
    base, gens, _ = code
    b = encode_stream(np.zeros((4, 256), np.uint8), base, gens, 1)[0]
    other = build_base_graph(256, (12,) + SIM[1:])
    with pytest.raises(ShapeMismatch):
        resolve_columns([b], other)
