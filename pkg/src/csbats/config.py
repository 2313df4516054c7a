"""Run configuration: an INI file of key/value sections plus flag overrides."""

from __future__ import annotations

import configparser
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .code_construct import PRESETS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # code
    K: int = field(default=256, metadata={"section": "code"})
    pk: int = field(default=256, metadata={"section": "code"})
    M: int = field(default=16, metadata={"section": "code"})
    s: int = field(default=8, metadata={"section": "code"})
    preset: str = field(default="paper-sim", metadata={"section": "code"})
    placement: str = field(default="evenly_spaced", metadata={"section": "code"})
    direction: str = field(default="right", metadata={"section": "code"})
    batches: int = field(default=64, metadata={"section": "code"})
    # channel
    hops: int = field(default=1, metadata={"section": "channel"})
    loss_p: float = field(default=0.1, metadata={"section": "channel"})
    recode: bool = field(default=True, metadata={"section": "channel"})
    decoder: str = field(default="inactivation", metadata={"section": "channel"})
    # experiment
    experiment: int = field(default=1, metadata={"section": "experiment"})
    labels: str = field(default="gf256,l16,l4,l2", metadata={"section": "experiment"})
    decoders: str = field(default="bp,inactivation", metadata={"section": "experiment"})
    trials: int = field(default=500, metadata={"section": "experiment"})
    hop_range: str = field(default="1-10", metadata={"section": "experiment"})
    batch_range: str = field(default="10-60:5", metadata={"section": "experiment"})
    exp_batches: int = field(default=20, metadata={"section": "experiment"})
    exp_hops: int = field(default=10, metadata={"section": "experiment"})
    exp_loss_p: float = field(default=0.1, metadata={"section": "experiment"})
    # analysis
    degrees: str = field(default="11,12,14,14", metadata={"section": "analysis"})
    u_values: str = field(default="2,4,16,64,256", metadata={"section": "analysis"})
    mc_trials: int = field(default=10000, metadata={"section": "analysis"})
    # hardware
    n_cus: int = field(default=4, metadata={"section": "hardware"})
    out_ports: int = field(default=1, metadata={"section": "hardware"})
    beta: int = field(default=64, metadata={"section": "hardware"})
    t_m: int = field(default=8, metadata={"section": "hardware"})
    t_k: int = field(default=8, metadata={"section": "hardware"})
    t_n: int = field(default=8, metadata={"section": "hardware"})
    port_width: int = field(default=512, metadata={"section": "hardware"})
    overhead: int = field(default=0, metadata={"section": "hardware"})
    sched_preset: str = field(default="paper-sched", metadata={"section": "hardware"})
    sched_batches: int = field(default=16, metadata={"section": "hardware"})
    bv_s: int = field(default=2, metadata={"section": "hardware"})
    # bench
    bench_batches: int = field(default=32, metadata={"section": "bench"})
    bench_trials: int = field(default=100, metadata={"section": "bench"})
    # run
    seed: int = field(default=0, metadata={"section": "run"})
    out: str = field(default=".", metadata={"section": "run"})
    jobs: int = field(default=1, metadata={"section": "run"})

    def __post_init__(self):
        for name in ("K", "pk", "M", "batches", "hops", "trials", "exp_batches", "exp_hops",
                     "mc_trials", "n_cus", "out_ports", "beta", "t_m", "t_k", "t_n",
                     "bench_batches", "bench_trials", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 1 <= self.s <= 8 or not 1 <= self.bv_s <= 8:
            raise ConfigError("s and bv_s must be in [1, 8]")
        for name in ("preset", "sched_preset"):
            if getattr(self, name) not in PRESETS:
                raise ConfigError(f"unknown {name} {getattr(self, name)!r}; choose from {sorted(PRESETS)}")
        if self.placement not in ("evenly_spaced", "uniform_random"):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.direction not in ("right", "left"):
            raise ConfigError("direction must be 'right' or 'left'")
        if not 0 <= self.loss_p < 1 or not 0 <= self.exp_loss_p < 1:
            raise ConfigError("loss probabilities must be in [0, 1)")
        if self.experiment not in (1, 2):
            raise ConfigError("experiment must be 1 or 2")
        if self.decoder not in ("bp", "inactivation", "oracle"):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if self.seed < 0 or self.overhead < 0:
            raise ConfigError("seed and overhead must be >= 0")
        # parse the list-valued fields once so errors surface at load time
        self.label_list, self.decoder_list, self.hop_list, self.batch_list
        self.degree_list, self.u_list

    # list-valued fields ------------------------------------------------------
    @property
    def label_list(self) -> tuple:
        from .analysis import LABELS
        out = tuple(x.strip() for x in self.labels.split(",") if x.strip())
        bad = [x for x in out if x not in LABELS]
        if bad or not out:
            raise ConfigError(f"unknown labels {bad}; choose from {sorted(LABELS)}")
        return out

    @property
    def decoder_list(self) -> tuple:
        out = tuple(x.strip() for x in self.decoders.split(",") if x.strip())
        if not out or any(x not in ("bp", "inactivation") for x in out):
            raise ConfigError(f"decoders must be a subset of bp,inactivation, got {self.decoders!r}")
        return out

    @property
    def hop_list(self) -> tuple:
        return _parse_range(self.hop_range, "hop_range")

    @property
    def batch_list(self) -> tuple:
        return _parse_range(self.batch_range, "batch_range")

    @property
    def degree_list(self) -> tuple:
        return _parse_ints(self.degrees, "degrees")

    @property
    def u_list(self) -> tuple:
        out = _parse_ints(self.u_values, "u_values")
        if any(u < 2 or u > 256 or u & (u - 1) for u in out):
            raise ConfigError("u_values must be powers of two in [2, 256]")
        return out

    # serialization -----------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, exclude=()) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for f in fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, str(getattr(self, f.name)).lower()
                   if isinstance(getattr(self, f.name), bool) else str(getattr(self, f.name)))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def override(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        unknown = set(kw) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        try:
            return replace(self, **kw)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e


def _parse_ints(text: str, name: str) -> tuple:
    try:
        out = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if not out:
        raise ConfigError(f"{name} is empty")
    return out


def _parse_range(text: str, name: str) -> tuple:
    """``"a-b"`` or ``"a-b:step"`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if "-" in text and "," not in text:
        span, _, step = text.partition(":")
        try:
            lo, hi = (int(x) for x in span.split("-"))
            step = int(step) if step else 1
        except ValueError:
            raise ConfigError(f"{name}: bad range {text!r}") from None
        if step < 1 or lo < 1 or hi < lo:
            raise ConfigError(f"{name}: bad range {text!r}")
        return tuple(range(lo, hi + 1, step))
    out = _parse_ints(text, name)
    if min(out) < 1:
        raise ConfigError(f"{name}: values must be >= 1")
    return out


def _coerce(f, raw: str):
    default = f.default
    try:
        if isinstance(default, bool):
            v = raw.strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return type(default)(raw.strip())
    except ValueError:
        raise ConfigError(f"{f.name}: cannot parse {raw!r} as {type(default).__name__}") from None


def load_config(path=None, text: str = None) -> RunConfig:
    """Read an INI file; unknown sections or keys are errors."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        if text is not None:
            cp.read_string(text)
        elif path is not None:
            with open(path) as fh:
                cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    by_name = {f.name: f for f in fields(RunConfig)}
    sections = {f.metadata["section"] for f in fields(RunConfig)}
    kw = {}
    for sec in cp.sections():
        if sec not in sections:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            f = by_name.get(key)
            if f is None or f.metadata["section"] != sec:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            kw[key] = _coerce(f, raw)
    return RunConfig(**kw)
