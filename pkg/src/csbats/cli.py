"""Command-line front end: ``csbats {encode,decode,simulate,analyze,hwmodel,bench}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import struct
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (LABELS, ExperimentConfig, RankBoundQuery, curves_to_csv, deletion_bound,
                       mc_full_rank_after_deletion, run_experiment)
from .channel import ChannelConfig, simulate_line_network
from .code_construct import (PRESETS, build_base_graph, build_generators, default_degree_distribution,
                             random_plan)
from .codec import (CodeParams, PayloadTooLarge, desegment, encode_batch, encode_stream,
                    read_stream, resolve_columns, segment_payload, write_stream)
from .config import ConfigError, RunConfig, load_config
from .decoder import bp_decode, global_elimination_oracle, inactivation_decode
from .gf_matrix import TileConfig
from .hw_model import (CuConfig, resource_report, schedule_load_balanced, schedule_sequential,
                       simulate_output_ports)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_BOUND, EXIT_BENCH = 0, 2, 3, 4, 5

_GEN_STREAM, _CHANNEL_STREAM, _PAYLOAD_STREAM = 2, 1, 3
_DECODERS = {"bp": bp_decode, "inactivation": inactivation_decode, "oracle": global_elimination_oracle}


class CliIOError(OSError):
    pass


def provenance(cfg: RunConfig, command: str) -> list:
    # out and jobs do not affect results, so they stay out of the header
    return [f"csbats {__version__} {command} seed={cfg.seed}",
            f"config {cfg.to_json(exclude=('out', 'jobs'))}"]


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.write_text(text)
    except OSError as e:
        raise CliIOError(str(e)) from e
    return path


def _params(cfg: RunConfig, s=None) -> CodeParams:
    return CodeParams(K=cfg.K, pk=cfg.pk, M=cfg.M, s=cfg.s if s is None else s)


def _base(cfg: RunConfig, preset=None):
    return build_base_graph(cfg.K, PRESETS[preset or cfg.preset], cfg.placement, cfg.seed)


def _generators(cfg: RunConfig, base, s):
    return build_generators(base, cfg.M, s, np.random.default_rng([cfg.seed, _GEN_STREAM, s]))


# --- encode / decode ---------------------------------------------------------

def cmd_encode(cfg: RunConfig, args) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as e:
        raise CliIOError(str(e)) from e
    params = _params(cfg)
    try:
        store = segment_payload(data, params)
    except PayloadTooLarge as e:
        raise ConfigError(f"{e}; raise K or pk") from e
    base = _base(cfg)
    gens = _generators(cfg, base, cfg.s)
    t0 = time.perf_counter()
    batches = encode_stream(store, base, gens, cfg.batches, cfg.direction)
    dt = time.perf_counter() - t0
    head = "".join(f"# {line}\n" for line in provenance(cfg, "encode")).encode()
    blob = head + write_stream(batches, cfg.K, len(data))
    name = args.output or (Path(args.input).name + ".bats")
    out = Path(cfg.out) / name
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(blob)
    except OSError as e:
        raise CliIOError(str(e)) from e
    mbps = len(data) * 8 / dt / 1e6 if dt > 0 else float("inf")
    print(f"encoded {len(data)} bytes into {len(batches)} batches -> {out}")
    print(f"throughput {mbps:.2f} Mbps (payload bits / encode time)")
    return EXIT_OK


def _split_header(blob: bytes):
    meta = {}
    while blob.startswith(b"#"):
        line, _, blob = blob.partition(b"\n")
        text = line[1:].decode(errors="replace").strip()
        if text.startswith("config "):
            meta = json.loads(text[len("config "):])
    return meta, blob


def cmd_decode(cfg: RunConfig, args) -> int:
    try:
        blob = Path(args.input).read_bytes()
    except OSError as e:
        raise CliIOError(str(e)) from e
    meta, body = _split_header(blob)
    # the code itself is fixed by the encoder's settings
    code_keys = ("K", "pk", "M", "preset", "placement", "direction")
    enc = cfg.override(**{k: meta[k] for k in code_keys if k in meta},
                       seed=meta.get("seed", cfg.seed))
    try:
        K, length, batches = read_stream(body)
    except (ValueError, EOFError, struct.error) as e:
        raise CliIOError(f"cannot parse stream: {e}") from e
    if K != enc.K:
        raise ConfigError(f"stream has K={K}, config has K={enc.K}")
    batches = resolve_columns(batches, _base(enc))
    chan = ChannelConfig(hops=cfg.hops, loss_p=cfg.loss_p, recode=cfg.recode)
    received = [simulate_line_network(b, chan, np.random.default_rng([cfg.seed, _CHANNEL_STREAM, b.batch_id]))
                for b in batches]
    res = _DECODERS[cfg.decoder](received, K)
    print(f"decoded {int(res.recovered.sum())}/{K} packets (rate {res.decoding_rate:.4f}) "
          f"with {cfg.decoder}, hops={cfg.hops}, loss_p={cfg.loss_p}")
    if res.recovered.all():
        name = args.output or (Path(args.input).stem + ".out")
        out = Path(cfg.out) / name
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(desegment(res.packets, length))
        except OSError as e:
            raise CliIOError(str(e)) from e
        print(f"payload ({length} bytes) -> {out}")
    else:
        print("payload incomplete; nothing written")
    return EXIT_OK


# --- experiments and bounds --------------------------------------------------

def experiment_config(cfg: RunConfig) -> ExperimentConfig:
    common = dict(params=_params(cfg), preset=cfg.preset, placement=cfg.placement,
                  labels=tuple(LABELS[x] for x in cfg.label_list), loss_p=cfg.exp_loss_p,
                  recode=cfg.recode, direction=cfg.direction, trials=cfg.trials, seed=cfg.seed,
                  decoders=cfg.decoder_list)
    if cfg.experiment == 1:
        return ExperimentConfig(experiment=1, hops=cfg.hop_list, batches=(cfg.exp_batches,), **common)
    return ExperimentConfig(experiment=2, hops=(cfg.exp_hops,), batches=cfg.batch_list, **common)


def gnuplot_blocks(points) -> str:
    """One data block per (decoder, label), separated by two blank lines."""
    groups = {}
    for p in points:
        groups.setdefault((p.decoder, p.label), []).append(p)
    out = []
    for (dec, label), pts in groups.items():
        out.append(f'"{dec} {label}"')
        out += [f"{p.x} {p.rate:.6f} {p.stderr:.6f}" for p in pts]
        out.append("\n")
    return "\n".join(out)


def cmd_simulate(cfg: RunConfig, args) -> int:
    ecfg = experiment_config(cfg)
    t0 = time.perf_counter()
    points = run_experiment(ecfg, jobs=cfg.jobs)
    head = provenance(cfg, "simulate")
    path = _write(cfg, f"experiment{cfg.experiment}.csv", curves_to_csv(points, head))
    if args.gnuplot:
        _write(cfg, f"experiment{cfg.experiment}.dat",
               "".join(f"# {h}\n" for h in head) + gnuplot_blocks(points))
    print(f"{len(points)} curve points in {time.perf_counter() - t0:.1f} s -> {path}")
    return EXIT_OK


def bound_rows(cfg: RunConfig):
    """Rows of (dg, u, deletions, bound, estimate, stderr, violation)."""
    rows = []
    for d in (1, 2):
        for u in cfg.u_list:
            per = []
            for k, dg in enumerate(cfg.degree_list):
                q = RankBoundQuery(M=cfg.M, dg=dg, u=u, deletions=d)
                b = deletion_bound(q)
                rng = np.random.default_rng([cfg.seed, d, u, k])
                est = mc_full_rank_after_deletion(q, cfg.mc_trials, rng)
                bad = est.value < b - 3 * est.stderr
                per.append((b, est.value, est.stderr))
                rows.append((str(dg), u, d, b, est.value, est.stderr, bad))
            bs, es, ss = zip(*per)
            se = float(np.sqrt(np.sum(np.square(ss)))) / len(ss)
            avg_b, avg_e = float(np.mean(bs)), float(np.mean(es))
            rows.append(("avg", u, d, avg_b, avg_e, se, avg_e < avg_b - 3 * se))
    return rows


def cmd_analyze(cfg: RunConfig, args) -> int:
    rows = bound_rows(cfg)
    buf = io.StringIO()
    for h in provenance(cfg, "analyze"):
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dg", "u", "deletions", "bound", "estimate", "stderr", "violation"])
    for dg, u, d, b, e, se, bad in rows:
        w.writerow([dg, u, d, f"{b:.6f}", f"{e:.6f}", f"{se:.6f}", int(bad)])
    path = _write(cfg, "bounds.csv", buf.getvalue())
    for dg, u, d, b, e, se, bad in rows:
        if dg == "avg":
            print(f"u={u:<3} deletions={d}  average bound {b:.4f}  estimate {e:.4f}")
    bad = [r for r in rows if r[-1]]
    print(f"{len(rows)} rows -> {path}")
    if bad:
        for r in bad:
            print(f"bound violated: dg={r[0]} u={r[1]} deletions={r[2]} bound={r[3]:.4f} "
                  f"estimate={r[4]:.4f} +- {r[5]:.4f}", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


# --- hardware model ----------------------------------------------------------

def _cu_config(cfg: RunConfig, **kw) -> CuConfig:
    tile = TileConfig(t_m=cfg.t_m, t_k=cfg.t_k, t_n=cfg.t_n, port_width_bits=cfg.port_width)
    base = dict(n_cus=cfg.n_cus, tile=tile, out_ports=cfg.out_ports, beta=cfg.beta, M=cfg.M, pk=cfg.pk)
    base.update(kw)
    return CuConfig(**base)


def cmd_hwmodel(cfg: RunConfig, args) -> int:
    head = provenance(cfg, "hwmodel")
    sbase = _base(cfg, cfg.sched_preset)
    seq = schedule_sequential(sbase, cfg.n_cus, cfg.sched_batches, cfg.overhead)
    lb = schedule_load_balanced(sbase, cfg.n_cus, cfg.sched_batches, cfg.overhead)
    _write(cfg, "schedule_sequential.csv", seq.to_csv(head))
    _write(cfg, "schedule_load_balanced.csv", lb.to_csv(head))
    print(f"scheduling {cfg.sched_batches} batches of {cfg.sched_preset} on {cfg.n_cus} CUs")
    for rep in (seq, lb):
        print(f"  {rep.policy:<14} totals {'/'.join(map(str, rep.totals))}  makespan {rep.makespan}")
        for cu in range(rep.n_cus):
            print(f"    CU #{cu + 1}: {', '.join(map(str, rep.degrees(cu)))}")

    ports_cfg = _cu_config(cfg, n_cus=args.port_cus)
    port_sched = schedule_load_balanced(sbase, args.port_cus, cfg.sched_batches, cfg.overhead)
    buf = io.StringIO()
    for h in head:
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_cus", "out_ports", "beta", "total_cycles", "total_stalls", "effective_rate"])
    print(f"output ports, {args.port_cus} CUs, beta={cfg.beta}, fill {ports_cfg.fill_rate}/cycle per CU")
    for ports in range(1, max(2, cfg.out_ports) + 1):
        rep = simulate_output_ports(replace(ports_cfg, out_ports=ports), port_sched)
        w.writerow([args.port_cus, ports, cfg.beta, rep.total_cycles, rep.total_stalls,
                    f"{rep.effective_rate:.3f}"])
        print(f"  {ports} port(s): {rep.total_cycles} cycles, {rep.total_stalls} stall cycles, "
              f"{rep.effective_rate:.1f} elements/cycle")
    _write(cfg, "ports.csv", buf.getvalue())

    rbase = _base(cfg)
    gens = _generators(cfg, rbase, cfg.bv_s)
    rep = resource_report(_params(cfg), _cu_config(cfg), gens)
    _write(cfg, "resources.csv", rep.to_csv(head))
    print(rep.to_text(), end="")
    return EXIT_OK


# --- benchmark ---------------------------------------------------------------

def _time(fn, trials):
    ts = []
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return np.array(ts)


def bench(cfg: RunConfig, batches=None, trials=None) -> dict:
    """Encode throughput in Mbps of coded output (mean, min, max) per variant."""
    N = batches or cfg.bench_batches
    trials = trials or cfg.bench_trials
    params = _params(cfg, 8)
    rng = np.random.default_rng([cfg.seed, _PAYLOAD_STREAM])
    store = rng.integers(0, 256, size=(params.pk, params.K), dtype=np.uint8)
    base = _base(cfg)
    full = _generators(cfg, base, 8)
    bv = _generators(cfg, base, cfg.bv_s)
    dist = default_degree_distribution(params.K, params.M)

    def random_bats():
        r = np.random.default_rng([cfg.seed, 9])
        for i in range(N):
            plan = random_plan(params.K, dist, r, i)
            G = r.integers(0, 256, size=(plan.degree, params.M), dtype=np.uint8)
            encode_batch(store, plan, G, method="table")

    variants = {
        "cs-bats/table": lambda: encode_stream(store, base, full, N, cfg.direction, "table"),
        "cs-bats/shift": lambda: encode_stream(store, base, full, N, cfg.direction, "shift"),
        f"cs-bats/bv-s{cfg.bv_s}": lambda: encode_stream(store, base, bv, N, cfg.direction, "bv"),
        "random-bats/table": random_bats,
    }
    bits = N * params.pk * params.M * 8
    out = {}
    for name, fn in variants.items():
        fn()  # warm-up (JIT, caches)
        mbps = bits / _time(fn, trials) / 1e6
        out[name] = (float(mbps.mean()), float(mbps.min()), float(mbps.max()))
    return out


def cmd_bench(cfg: RunConfig, args) -> int:
    res = bench(cfg, args.batches, args.bench_trials)
    buf = io.StringIO()
    for h in provenance(cfg, "bench"):
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "mean_mbps", "min_mbps", "max_mbps"])
    for name, (mean, lo, hi) in res.items():
        w.writerow([name, f"{mean:.2f}", f"{lo:.2f}", f"{hi:.2f}"])
        print(f"{name:<20} mean {mean:9.2f}  min {lo:9.2f}  max {hi:9.2f} Mbps")
    _write(cfg, "bench.csv", buf.getvalue())
    cs, rnd = res["cs-bats/table"][0], res["random-bats/table"][0]
    if cs < rnd:
        print(f"CS-BATS ({cs:.2f} Mbps) slower than random BATS ({rnd:.2f} Mbps)", file=sys.stderr)
        return EXIT_BENCH
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--save-config", metavar="PATH", help="write the resolved config and exit")

    p = argparse.ArgumentParser(prog="csbats", description=__doc__)
    p.add_argument("--version", action="version", version=f"csbats {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", parents=[common], help="encode a file into a batch stream")
    enc.add_argument("input")
    enc.add_argument("-o", "--output", help="file name inside --out")
    enc.add_argument("--batches", type=int)
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", parents=[common], help="send a stream through a channel and decode")
    dec.add_argument("input")
    dec.add_argument("-o", "--output", help="file name inside --out")
    dec.add_argument("--hops", type=int)
    dec.add_argument("--loss", dest="loss_p", type=float)
    dec.add_argument("--no-recode", dest="recode", action="store_false", default=None)
    dec.add_argument("--decoder", choices=sorted(_DECODERS))
    dec.set_defaults(func=cmd_decode)

    sim = sub.add_parser("simulate", parents=[common], help="decoding-rate experiments")
    sim.add_argument("--experiment", type=int, choices=(1, 2))
    sim.add_argument("--labels", help="comma list of " + ",".join(LABELS))
    sim.add_argument("--decoders")
    sim.add_argument("--gnuplot", action="store_true", help="also write a gnuplot data file")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", parents=[common], help="deletion bounds vs Monte Carlo")
    ana.add_argument("--degrees")
    ana.add_argument("--u-values", dest="u_values")
    ana.add_argument("--mc-trials", dest="mc_trials", type=int)
    ana.set_defaults(func=cmd_analyze)

    hw = sub.add_parser("hwmodel", parents=[common], help="schedules, port sharing and resources")
    hw.add_argument("--n-cus", dest="n_cus", type=int)
    hw.add_argument("--port-cus", type=int, default=8, help="CUs in the port-sharing study")
    hw.add_argument("--beta", type=int)
    hw.set_defaults(func=cmd_hwmodel)

    be = sub.add_parser("bench", parents=[common], help="encoder throughput")
    be.add_argument("--batches", type=int)
    be.add_argument("--bench-trials", type=int)
    be.set_defaults(func=cmd_bench)
    return p


_OVERRIDES = ("seed", "out", "jobs", "trials", "preset", "batches", "hops", "loss_p", "recode",
              "decoder", "experiment", "labels", "decoders", "degrees", "u_values", "mc_trials",
              "n_cus", "beta")


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.override(**{k: getattr(args, k, None) for k in _OVERRIDES})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.save_config:
            Path(args.save_config).write_text(cfg.to_ini())
            return EXIT_OK
        return args.func(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (CliIOError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
