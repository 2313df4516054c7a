"""Cyclic-shift BATS codes with bounded-value generators.

Field arithmetic, code construction, encoding, a multihop erasure channel
with recoding, BP and inactivation decoders, rank-deficiency analysis and a
cost/scheduling model of an encoder accelerator.
"""

from .gf_core import (DEFAULT_FIELD, FieldSpec, gf_add, gf_inv, gf_mul_bounded,
                      gf_mul_shift, gf_mul_table, mac_gate_cost, tables_for)
from .gf_matrix import TileConfig, mat_mul, mat_mul_tiled, rank, ranks, row_reduce, transaction_count
from .code_construct import (PRESETS, BaseGraph, GeneratorSet, build_base_graph, build_generators,
                             cs_plan, random_plan)
from .codec import Batch, CodeParams, encode_batch, encode_stream, segment_payload, desegment
from .channel import ChannelConfig, simulate_line_network, transfer_matrices
from .decoder import DecodeResult, bp_decode, build_system, global_elimination_oracle, inactivation_decode
from .analysis import (ExperimentConfig, RankBoundQuery, deletion_bound, mc_full_rank_after_deletion,
                       run_experiment, zeta)
from .hw_model import (CuConfig, resource_report, schedule_load_balanced, schedule_sequential,
                       simulate_output_ports)

__version__ = "0.1.0"
