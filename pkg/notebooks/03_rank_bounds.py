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
# # Full-rank probabilities and column deletion
#
# `zeta(m, r, u)` is the chance that a uniform `r x m` matrix over a field
# of size `u` has full rank. When a generator loses columns to erasures we
# want the chance that it keeps full rank, given it had it.

# %%
import numpy as np

from csbats import RankBoundQuery, deletion_bound, mc_full_rank_after_deletion, zeta

# %%
print(zeta(2, 2, 2, exact=True), zeta(16, 16, 2), zeta(16, 16, 256))

# %%
degrees = (11, 12, 14, 14)
rng = np.random.default_rng(0)
print("u    deletions  bound   estimate")
for u in (2, 4, 16, 64, 256):
    for d in (1, 2):
        qs = [RankBoundQuery(16, dg, u, d) for dg in degrees]
        bound = np.mean([deletion_bound(q) for q in qs])
        est = np.mean([mc_full_rank_after_deletion(q, 2000, rng).value for q in qs])
        print(f"{u:<4} {d:<10} {bound:.4f}  {est:.4f}")

# %% [markdown]
# Over GF(2) there is only about a 62% chance that two deletions leave these
# generators full rank. From 16 elements upward the loss is negligible.
