"""Benchmark run configuration.

A scenario file may carry a "bench" section; flags and the DISPATCH_SEED
environment variable can override individual fields afterwards.  Precedence,
lowest to highest: built-in default, scenario file, DISPATCH_SEED, CLI flag.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError

SEED_ENV_VAR = "DISPATCH_SEED"

SETUPS = ("centralized", "distributed", "decentralized")

#: hidden widths that equalize total parameter count across setups at the
#: reference community size (33 agents, 100 generators, 100 loads each)
REFERENCE_HIDDEN = {"centralized": 6000, "distributed": 5133, "decentralized": 3655}

REFERENCE_TARGET_PARAMS = 39_807_333


@dataclass(frozen=True)
class BenchConfig:
    experiment: str = "bench"
    setups: tuple[str, ...] = SETUPS
    fluctuation: float = 0.0
    seed: int = 0
    repetitions: int = 1
    target_params: int | None = None
    hidden_nodes: tuple[int, ...] = ()
    gen_counts: tuple[int, ...] = ()
    hidden_per_setup: dict[str, int] = field(default_factory=lambda: dict(REFERENCE_HIDDEN))
    surrogate_rounds: int = 1
    energy_model: str = "builtin:table2_calibrated"
    rho: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.fluctuation < 1.0:
            raise ConfigError(f"fluctuation must be in [0, 1), got {self.fluctuation}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.surrogate_rounds < 1:
            raise ConfigError(f"surrogate_rounds must be >= 1, got {self.surrogate_rounds}")
        for s in self.setups:
            if s not in SETUPS:
                raise ConfigError(f"unknown setup {s!r}; expected one of {SETUPS}")
        if self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")

    def with_overrides(self, **kwargs) -> "BenchConfig":
        """Return a copy with non-None override values applied."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self


_FIELD_PARSERS = {
    "experiment": str,
    "setups": lambda v: tuple(v),
    "fluctuation": float,
    "seed": int,
    "repetitions": int,
    "target_params": lambda v: None if v is None else int(v),
    "hidden_nodes": lambda v: tuple(int(x) for x in v),
    "gen_counts": lambda v: tuple(int(x) for x in v),
    "hidden_per_setup": lambda v: {str(k): int(x) for k, x in v.items()},
    "surrogate_rounds": int,
    "energy_model": str,
    "rho": float,
    "tol": float,
    "max_iter": int,
}


def env_seed() -> int | None:
    """Seed forced through the environment, or None when unset."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def bench_config_from_mapping(data: dict) -> BenchConfig:
    """Build a BenchConfig from a parsed "bench" JSON section.

    Unknown keys are rejected so typos fail loudly.  DISPATCH_SEED, when set,
    replaces the file's seed.
    """
    kwargs = {}
    for key, value in data.items():
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"unknown bench config key {key!r}")
        try:
            kwargs[key] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for bench config key {key!r}: {value!r}") from exc
    cfg = BenchConfig(**kwargs)
    forced = env_seed()
    if forced is not None:
        cfg = replace(cfg, seed=forced)
    return cfg
