import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csbats.code_construct import (PRESETS, BaseGraph, GeneratorSet, InvalidDegree,
                                   InvalidDistribution, build_base_graph, build_generators,
                                   cs_plan, default_degree_distribution, is_full_rank_set,
                                   pack_generators, random_plan, read_base_graph,
                                   unpack_generators, write_base_graph)
from csbats.gf_matrix import rank

SIM = PRESETS["paper-sim"]


def test_presets():
    assert SIM == (11, 12, 14, 14, 19, 20, 27)
    assert PRESETS["paper-sched"] == (11, 12, 14, 14, 16, 19, 20, 27)
    assert PRESETS["paper-impl"] == (11, 12, 14, 14, 19, 20, 27, 32)


def test_evenly_spaced_small():
    assert build_base_graph(8, [2]).rows == ((0, 4),)
    assert build_base_graph(8, [8]).rows == (tuple(range(8)),)


def test_sim_preset_graph():
    g = build_base_graph(256, SIM)
    assert g.m == 7 and g.d_max == 27 and g.degrees == SIM
    assert g.adjacency().sum() == sum(SIM)


def test_collisions_advance():
    g = build_base_graph(5, [4, 5])
    assert g.degrees == (4, 5)


def test_base_graph_deterministic():
    a = build_base_graph(256, SIM, "uniform_random", seed=3)
    b = build_base_graph(256, SIM, "uniform_random", seed=3)
    c = build_base_graph(256, SIM, "uniform_random", seed=4)
    assert a == b and a != c


def test_bad_degree():
    with pytest.raises(InvalidDegree):
        build_base_graph(8, [9])
    with pytest.raises(InvalidDegree):
        build_base_graph(8, [0])
    with pytest.raises(ValueError):
        build_base_graph(8, [2], placement="spiral")


def test_cs_plan_examples():
    g = BaseGraph(K=8, rows=((0, 1),))
    assert cs_plan(g, 0).columns == (0, 1)
    assert cs_plan(g, 1).columns == (1, 2)
    assert cs_plan(g, 1, "left").columns == (7, 0)
    assert cs_plan(g, 8).columns == (0, 1)  # m*K wraps around


def test_cs_plan_first_layer_is_base():
    g = build_base_graph(256, SIM)
    for i in range(g.m):
        p = cs_plan(g, i)
        assert p.shift == 0 and p.columns == g.rows[i] and p.row == i


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["right", "left"]))
def test_cs_plan_properties(i, direction):
    g = build_base_graph(64, SIM)
    p = cs_plan(g, i, direction)
    assert p.degree == g.degrees[i % g.m]
    assert p.columns == cs_plan(g, i + g.m * g.K, direction).columns
    sign = 1 if direction == "right" else -1
    assert p.columns == tuple((c + sign * (i // g.m)) % 64 for c in g.rows[i % g.m])


def test_random_plan(rng):
    assert sorted(random_plan(10, {10: 1.0}, rng).columns) == list(range(10))
    cols = [random_plan(10, {1: 1.0}, rng).columns for _ in range(300)]
    assert all(len(c) == 1 for c in cols)
    assert len({c[0] for c in cols}) == 10
    with pytest.raises(InvalidDistribution):
        random_plan(10, {3: 0.5}, rng)
    with pytest.raises(InvalidDistribution):
        random_plan(10, {11: 1.0}, rng)


def test_default_degree_distribution():
    d = default_degree_distribution(256, 16)
    assert abs(sum(d.values()) - 1) < 1e-12
    assert max(d, key=d.get) == 16 and max(d) == 256


@pytest.mark.parametrize("s", [1, 2, 4, 8])
def test_generators(rng, s):
    g = build_base_graph(256, SIM)
    gens = build_generators(g, 16, s, rng)
    assert gens.degrees == SIM
    assert is_full_rank_set(gens)
    assert all(int(G.max()) < 2 ** s for G in gens.matrices)
    for G in gens.matrices:
        assert rank(G) == min(G.shape)
    assert gens.rom_bytes_full == 1872
    assert gens.rom_bytes_bv == 1872 * s // 8


def test_rom_reference_figures(rng):
    g = build_base_graph(256, SIM)
    assert build_generators(g, 16, 8, rng).rom_bytes_bv == 1872
    assert build_generators(g, 16, 2, rng).rom_bytes_bv == 468


def test_generator_set_validation():
    with pytest.raises(ValueError):
        GeneratorSet(matrices=(np.full((2, 4), 5, np.uint8),), M=4, s=2)
    with pytest.raises(ValueError):
        GeneratorSet(matrices=(np.zeros((2, 3), np.uint8),), M=4, s=2)


@pytest.mark.parametrize("s", [1, 2, 3, 4, 8])
def test_rom_round_trip(rng, s):
    g = build_base_graph(64, (3, 5, 9, 17))
    gens = build_generators(g, 16, s, rng)
    back = unpack_generators(pack_generators(gens))
    assert back.s == s and back.M == 16
    for a, b in zip(gens.matrices, back.matrices):
        assert np.array_equal(a, b)


def test_rom_rejects_garbage():
    with pytest.raises(ValueError):
        unpack_generators(b"XXXX" + bytes(20))


def test_base_graph_file_round_trip(tmp_path):
    g = build_base_graph(256, SIM, "uniform_random", seed=9)
    path = tmp_path / "g.txt"
    write_base_graph(g, path)
    assert read_base_graph(path) == g
    path.write_text("8 2\n0 1\n")
    with pytest.raises(ValueError):
        read_base_graph(path)
