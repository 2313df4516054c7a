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
# # Scheduling, output ports and resources
#
# A batch keeps its compute unit (CU) busy for as many cycles as its degree.
# Handing rows out in order leaves the CU with the heaviest row far behind.
# Reversing the order on every other layer pairs heavy rows with light ones.

# %%
import numpy as np

from csbats import (CodeParams, CuConfig, TileConfig, build_base_graph, build_generators,
                    resource_report, schedule_load_balanced, schedule_sequential,
                    simulate_output_ports)
from csbats.code_construct import PRESETS

# %%
base = build_base_graph(256, PRESETS["paper-sched"])
for rep in (schedule_sequential(base, 4, 16), schedule_load_balanced(base, 4, 16)):
    print(rep.policy, rep.totals, "makespan", rep.makespan)
    for cu in range(4):
        print(f"  CU #{cu + 1}: {rep.degrees(cu)}")

# %% [markdown]
# ## Sharing output ports
#
# Eight CUs each fill 64 elements per cycle; a port writes `beta` per cycle.

# %%
sched = schedule_load_balanced(base, 8, 16)
for ports in (1, 2):
    for beta in (64, 128):
        r = simulate_output_ports(CuConfig(n_cus=8, out_ports=ports, beta=beta), sched)
        print(f"ports={ports} beta={beta:<4} cycles={r.total_cycles:<6} stalls={r.total_stalls}")

# %% [markdown]
# ## Resource summary

# %%
gens = build_generators(build_base_graph(256, PRESETS["paper-sim"]), 16, 2, np.random.default_rng(0))
print(resource_report(CodeParams(), CuConfig(tile=TileConfig(port_width_bits=512)), gens).to_text())
