# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Field arithmetic and batch encoding
#
# A batch is `X = B G`: the packets picked by one base-graph row (`B`, one
# column per packet) times a small generator matrix `G`. When the entries of
# `G` are limited to `s` bits, the multiplier only has to run `s` shift/xor
# steps instead of eight.

# %%
import numpy as np

from csbats import (CodeParams, build_base_graph, build_generators, cs_plan, encode_stream,
                    gf_mul_bounded, gf_mul_shift, gf_mul_table, mac_gate_cost, segment_payload)
from csbats.code_construct import PRESETS

# %%
a, b = 0x57, 0x03
print(gf_mul_shift(a, b), gf_mul_table(a, b), gf_mul_bounded(a, b, s=2))

# %% [markdown]
# Gate cost of an 8x8 array of multiply-accumulate cells, full width against
# a 2-bit bounded coefficient.

# %%
full, bv = mac_gate_cost(8), mac_gate_cost(8, s=2)
print(full, bv, f"{full.total / bv.total:.1f}x")

# %% [markdown]
# ## The cyclic-shift plan
#
# Batch `i` reuses row `i mod m` of the base graph, rotated by `i // m`
# columns. Seven rows cover 117 of the 256 packets per layer.

# %%
base = build_base_graph(256, PRESETS["paper-sim"])
for i in (0, 1, 7, 8, 15):
    p = cs_plan(base, i)
    print(i, p.row, p.shift, p.columns[:5], "...")

covered = set()
for n in range(1, 81):
    covered |= set(cs_plan(base, n - 1).columns)
    if n in (7, 20, 40, 64, 80):
        print(f"{n:3d} batches cover {len(covered)} packets")

# %% [markdown]
# ## Encoding a file-sized payload

# %%
params = CodeParams()
rng = np.random.default_rng(0)
data = rng.integers(0, 256, 50_000, dtype=np.uint8).tobytes()
store = segment_payload(data, params)
gens = build_generators(base, params.M, s=2, rng=rng)
batches = encode_stream(store, base, gens, N=64)
print(len(batches), batches[0].X.shape, gens.rom_bytes_full, gens.rom_bytes_bv)
