"""Experiment configuration: a flat ``key = value`` text format with dotted keys.

Lines look like ``node.alpha = 0.996``. ``#`` starts a comment. A value may be
a comma-separated list (``chain.n_links = 8, 10, 12``) or an inclusive range
``start:stop:step`` (``workload.lambda = 250:12000:250``).
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .model import Noise, Policy, ServiceMode, SourcePlacement
from .simulator import ServiceModel

CONFIG_DIR_ENV = "REPCHAIN_CONFIG_DIR"


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class Engine(str, enum.Enum):
    ANALYTIC = "analytic"
    SIMULATE = "simulate"
    BOTH = "both"


@dataclass(frozen=True)
class ExperimentConfig:
    n_links: tuple[int, ...] = (8, 10, 12, 15)
    total_length_km: float = 500.0
    light_speed_km_s: float = 2.0e5
    placement: SourcePlacement = SourcePlacement.AT_NODE
    coherence_time_s: float = 1.0
    alpha: float = 0.996
    werner_w: float = 0.995
    beta_s: float = 1e-5
    efficiency: float = 0.7
    attenuation_km: float = 22.0
    kappa_s: float = 0.0
    noise: Noise = Noise.DEPOLARIZING
    policies: tuple[Policy, ...] = (Policy.OQF, Policy.YQF)
    service_mode: ServiceMode = ServiceMode.UPPER_BOUND
    lambdas: tuple[float, ...] = tuple(float(x) for x in range(250, 12001, 250))
    engine: Engine = Engine.ANALYTIC
    trials: int = 100_000
    requests: int = 100_000
    warmup: float = 0.2
    seed: int = 0
    sim_service: ServiceModel = ServiceModel.EXP_UPPER_BOUND
    distances_km: tuple[float, ...] = tuple(float(x) for x in range(50, 1001, 50))
    n_min: int = 2
    n_max: int = 100
    search_lambdas: tuple[float, ...] = (2000.0, 8000.0)
    search_policies: tuple[Policy, ...] = (Policy.YQF,)
    heatmap_coherence_s: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
    heatmap_alpha: tuple[float, ...] = (0.99, 0.992, 0.994, 0.996, 0.998, 0.999, 1.0)
    output: str | None = None
    json: bool = False
    workers: int = 1


# config key -> (field name, parser kind)
KEYS: dict[str, tuple[str, str]] = {
    "chain.n_links": ("n_links", "int_list"),
    "chain.total_length_km": ("total_length_km", "float"),
    "chain.light_speed_km_s": ("light_speed_km_s", "float"),
    "chain.placement": ("placement", "placement"),
    "node.coherence_time_s": ("coherence_time_s", "float"),
    "node.alpha": ("alpha", "float"),
    "link.werner_w": ("werner_w", "float"),
    "link.beta_s": ("beta_s", "float"),
    "link.efficiency": ("efficiency", "float"),
    "link.attenuation_km": ("attenuation_km", "float"),
    "link.kappa_s": ("kappa_s", "float"),
    "model.noise": ("noise", "noise"),
    "model.policy": ("policies", "policy_list"),
    "model.service_mode": ("service_mode", "service_mode"),
    "workload.lambda": ("lambdas", "float_list"),
    "engine": ("engine", "engine"),
    "sim.trials": ("trials", "int"),
    "sim.requests": ("requests", "int"),
    "sim.warmup": ("warmup", "float"),
    "sim.seed": ("seed", "int"),
    "sim.service_model": ("sim_service", "service_model"),
    "distance.km": ("distances_km", "float_list"),
    "search.n_min": ("n_min", "int"),
    "search.n_max": ("n_max", "int"),
    "search.lambda": ("search_lambdas", "float_list"),
    "search.policy": ("search_policies", "policy_list"),
    "heatmap.coherence_time_s": ("heatmap_coherence_s", "float_list"),
    "heatmap.alpha": ("heatmap_alpha", "float_list"),
    "output.path": ("output", "str"),
    "output.json": ("json", "bool"),
    "run.workers": ("workers", "int"),
}

_ENUMS = {
    "placement": SourcePlacement,
    "noise": Noise,
    "service_mode": ServiceMode,
    "engine": Engine,
    "service_model": ServiceModel,
}


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _parse_list(text: str, conv) -> tuple:
    text = text.strip()
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = start + step * np.arange(count)
        return tuple(conv(repr(float(v))) for v in np.round(values, 12))
    return tuple(conv(item.strip()) for item in text.split(",") if item.strip())


def parse_value(key: str, text: str):
    if key not in KEYS:
        raise ConfigError(key, "unknown configuration key")
    _, kind = KEYS[key]
    try:
        if kind == "float":
            return _parse_float(text)
        if kind == "int":
            return _parse_int(text)
        if kind == "str":
            return text.strip()
        if kind == "bool":
            low = text.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"not a boolean: {text!r}")
            return low in ("true", "1", "yes")
        if kind == "float_list":
            return _parse_list(text, _parse_float)
        if kind == "int_list":
            return _parse_list(text, _parse_int)
        if kind == "policy_list":
            return tuple(Policy(x.strip().lower()) for x in text.split(",") if x.strip())
        return _ENUMS[kind](text.strip().lower())
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def parse_text(text: str) -> dict[str, object]:
    """Parse config text into ``{key: parsed value}``."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        values[key] = parse_value(key, value.strip())
    return values


def resolve_path(path: str | os.PathLike) -> Path:
    """Find a config file, falling back to ``$REPCHAIN_CONFIG_DIR`` for relative paths."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def build_config(values: dict[str, object], base: ExperimentConfig | None = None) -> ExperimentConfig:
    changes = {KEYS[k][0]: v for k, v in values.items()}
    cfg = replace(base or ExperimentConfig(), **changes)
    validate(cfg)
    return cfg


def load_config(
    path: str | os.PathLike | None = None,
    overrides: dict[str, str] | None = None,
) -> ExperimentConfig:
    values: dict[str, object] = {}
    if path is not None:
        resolved = resolve_path(path)
        try:
            text = resolved.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {resolved}: {exc.strerror}") from None
        values.update(parse_text(text))
    for key, text in (overrides or {}).items():
        values[key] = parse_value(key, text)
    return build_config(values)


def _key_of(field_name: str) -> str:
    for key, (name, _) in KEYS.items():
        if name == field_name:
            return key
    return field_name


def validate(cfg: ExperimentConfig) -> None:
    def fail(name, msg):
        raise ConfigError(_key_of(name), msg)

    def positive(name):
        v = getattr(cfg, name)
        if not v > 0:
            fail(name, f"must be > 0, got {v}")

    def unit(name, low_open=False):
        v = getattr(cfg, name)
        ok = (0 < v <= 1) if low_open else (0 <= v <= 1)
        if not ok:
            fail(name, f"must lie in {'(0' if low_open else '[0'}, 1], got {v}")

    def grid(name, check):
        v = getattr(cfg, name)
        if len(v) == 0:
            fail(name, "grid must be non-empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            fail(name, "grid must be strictly increasing")
        for x in v:
            if not check(x):
                fail(name, f"invalid grid value {x}")

    for name in ("total_length_km", "light_speed_km_s", "coherence_time_s", "beta_s", "attenuation_km"):
        positive(name)
    unit("alpha")
    unit("werner_w")
    unit("efficiency", low_open=True)
    if not cfg.kappa_s >= 0:
        fail("kappa_s", f"must be >= 0, got {cfg.kappa_s}")
    grid("n_links", lambda n: n >= 1)
    grid("lambdas", lambda x: x > 0)
    grid("search_lambdas", lambda x: x > 0)
    grid("distances_km", lambda x: x > 0)
    grid("heatmap_coherence_s", lambda x: x > 0)
    grid("heatmap_alpha", lambda x: 0 <= x <= 1)
    for name in ("policies", "search_policies"):
        v = getattr(cfg, name)
        if not v:
            fail(name, "at least one policy required")
        if len(set(v)) != len(v):
            fail(name, "duplicate policy")
    if cfg.trials < 1:
        fail("trials", "must be >= 1")
    if cfg.requests < 1:
        fail("requests", "must be >= 1")
    if not 0 <= cfg.warmup < 1:
        fail("warmup", f"must lie in [0, 1), got {cfg.warmup}")
    if cfg.n_min < 1:
        fail("n_min", f"must be >= 1, got {cfg.n_min}")
    if cfg.n_max < cfg.n_min:
        fail("n_max", f"must be >= n_min, got {cfg.n_min}..{cfg.n_max}")
    if cfg.workers < 1:
        fail("workers", "must be >= 1")
    if cfg.seed < 0:
        fail("seed", "must be >= 0")


def dump(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back into the text format."""
    lines = []
    by_field = {name: key for key, (name, _) in KEYS.items()}
    for f in fields(cfg):
        key = by_field[f.name]
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            text = ", ".join(x.value if hasattr(x, "value") else repr(x) for x in v)
        elif hasattr(v, "value"):
            text = v.value
        elif isinstance(v, bool):
            text = "true" if v else "false"
        else:
            text = str(v)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"

