"""Experiment configuration: strict JSON schema with defaults for the squeezed-state run.

Schema (version 1)::

    {
      "version": 1,
      "state": {"kind": "squeezed", "alpha_abs": 5.0, "alpha_phase": 0.6, "s": 6.0},
      "fock_dim": 160,
      "n_theta": 41,
      "total_events": 6020,
      "allocation": {"strategy": "psi1-optimal", "min_events": 10, "max_events": 800},
      "k_max": 6,
      "seed": 20240601,
      "grid": {"x_points": 4096, "kernel_step": 0.01, "crossover_x": 12.0, "phi_points": 1024},
      "output_dir": "results",
      "cache_dir": ".kernel_cache"
    }

State kinds: ``coherent`` (alpha_abs, alpha_phase), ``squeezed`` (alpha_abs,
alpha_phase, s) and ``fock`` (n).  Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .kernels.table import MAX_TABLE_K
from .simulator import STRATEGIES

CONFIG_VERSION = 1
STATE_KEYS = {
    "coherent": ("alpha_abs", "alpha_phase"),
    "squeezed": ("alpha_abs", "alpha_phase", "s"),
    "fock": ("n",),
}


@dataclass(frozen=True)
class StateSpec:
    kind: str = "squeezed"
    alpha_abs: float = 5.0
    alpha_phase: float = 0.6
    s: float = 6.0
    n: int = 0

    @property
    def alpha(self):
        return self.alpha_abs * complex(math.cos(self.alpha_phase), math.sin(self.alpha_phase))

    def to_dict(self):
        d = {"kind": self.kind}
        d.update({key: getattr(self, key) for key in STATE_KEYS[self.kind]})
        return d

    def build(self, dim):
        from .quantum_state import coherent_state, fock_state, squeezed_coherent_state

        if self.kind == "coherent":
            return coherent_state(self.alpha, dim).density_matrix()
        if self.kind == "squeezed":
            return squeezed_coherent_state(self.alpha, self.s, dim).density_matrix()
        return fock_state(self.n, dim).density_matrix()


@dataclass(frozen=True)
class Allocation:
    strategy: str = "psi1-optimal"
    min_events: int = 10
    max_events: int = 800


@dataclass(frozen=True)
class GridSpec:
    x_points: int = 4096
    kernel_step: float = 0.01
    crossover_x: float = 12.0
    phi_points: int = 1024


@dataclass(frozen=True)
class ExperimentConfig:
    state: StateSpec = field(default_factory=StateSpec)
    fock_dim: int = 160
    n_theta: int = 41
    total_events: int = 6020
    allocation: Allocation = field(default_factory=Allocation)
    k_max: int = 6
    seed: int = 20240601
    grid: GridSpec = field(default_factory=GridSpec)
    output_dir: str = "results"
    cache_dir: str = ".kernel_cache"

    def to_dict(self):
        d = {"version": CONFIG_VERSION}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "state":
                v = v.to_dict()
            elif hasattr(v, "__dataclass_fields__"):
                v = asdict(v)
            d[f.name] = v
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


def _take(d, cls, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name: f for f in fields(cls)}
    unknown = set(d) - set(names)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(unknown)}")
    return d


def _typed(value, typ, where):
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    raise TypeError(typ)


_TYPES = {
    "StateSpec": {"kind": str, "alpha_abs": float, "alpha_phase": float, "s": float, "n": int},
    "Allocation": {"strategy": str, "min_events": int, "max_events": int},
    "GridSpec": {"x_points": int, "kernel_step": float, "crossover_x": float, "phi_points": int},
    "ExperimentConfig": {"fock_dim": int, "n_theta": int, "total_events": int, "k_max": int,
                         "seed": int, "output_dir": str, "cache_dir": str},
}


def _build(cls, d, where):
    types = _TYPES[cls.__name__]
    kw = {}
    for key, value in d.items():
        kw[key] = _typed(value, types[key], f"{where}.{key}")
    return cls(**kw)


def _parse_state(d):
    if not isinstance(d, dict):
        raise ConfigError("state must be an object")
    kind = d.get("kind", "squeezed")
    if kind not in STATE_KEYS:
        raise ConfigError(f"unknown state kind {kind!r}; expected one of {sorted(STATE_KEYS)}")
    allowed = {"kind", *STATE_KEYS[kind]}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"field(s) {sorted(unknown)} not valid for state kind {kind!r}")
    return _build(StateSpec, d, "state")


def from_dict(d):
    """Parse and validate a configuration mapping."""
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    d = dict(d)
    version = d.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}; expected {CONFIG_VERSION}")
    _take(d, ExperimentConfig, "config")
    kw = {}
    for key, value in d.items():
        if key == "state":
            kw[key] = _parse_state(value)
        elif key == "allocation":
            kw[key] = _build(Allocation, _take(value, Allocation, key), key)
        elif key == "grid":
            kw[key] = _build(GridSpec, _take(value, GridSpec, key), key)
        else:
            kw[key] = _typed(value, _TYPES["ExperimentConfig"][key], key)
    cfg = ExperimentConfig(**kw)
    validate(cfg)
    return cfg


def from_json(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_dict(d)


def load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_json(text)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate(cfg):
    st = cfg.state
    _require(st.kind in STATE_KEYS, f"unknown state kind {st.kind!r}")
    _require(2 <= cfg.fock_dim <= 1024, "fock_dim must lie in [2, 1024]")
    if st.kind in ("coherent", "squeezed"):
        _require(0 <= st.alpha_abs <= 30, "alpha_abs must lie in [0, 30]")
        _require(math.isfinite(st.alpha_phase), "alpha_phase must be finite")
    if st.kind == "squeezed":
        _require(0 < st.s <= 100, "s must lie in (0, 100]")
    if st.kind == "fock":
        _require(0 <= st.n < cfg.fock_dim, "Fock level n must lie in [0, fock_dim)")
    _require(1 <= cfg.n_theta <= 1000, "n_theta must lie in [1, 1000]")
    _require(cfg.n_theta <= cfg.total_events <= 10**8,
             "total_events must lie in [n_theta, 1e8]")
    a = cfg.allocation
    _require(a.strategy in STRATEGIES, f"allocation.strategy must be one of {STRATEGIES}")
    _require(1 <= a.min_events <= a.max_events, "need 1 <= min_events <= max_events")
    _require(1 <= cfg.k_max <= MAX_TABLE_K, f"k_max must lie in [1, {MAX_TABLE_K}]")
    _require(cfg.k_max < cfg.fock_dim, "k_max must be below fock_dim")
    _require(cfg.seed >= 0, "seed must be nonnegative")
    g = cfg.grid
    _require(64 <= g.x_points <= 1 << 20, "grid.x_points must lie in [64, 2^20]")
    _require(1e-4 <= g.kernel_step <= 0.1, "grid.kernel_step must lie in [1e-4, 0.1]")
    _require(4.5 <= g.crossover_x <= 20, "grid.crossover_x must lie in [4.5, 20]")
    _require(abs(g.crossover_x / g.kernel_step - round(g.crossover_x / g.kernel_step)) < 1e-9,
             "grid.crossover_x must be a multiple of grid.kernel_step")
    _require(16 <= g.phi_points <= 1 << 16, "grid.phi_points must lie in [16, 65536]")
    _require(bool(cfg.output_dir) and bool(cfg.cache_dir), "output_dir and cache_dir must be set")
    return cfg
