"""Domain model for a community of dispatchable agents.

An agent owns a handful of generators with quadratic cost curves and a set of
fixed loads.  A community is a list of agents with identical generator and
load counts (the setups' network shapes depend on that uniformity).  Scenario
files are JSON; loads fluctuate uniformly around their nominal values when
sampled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .config import BenchConfig, bench_config_from_mapping
from .errors import (
    InfeasibleError,
    NonConvexCostError,
    NonUniformAgentsError,
    ScenarioParseError,
    ValidationError,
)

BUILTIN_PREFIX = "builtin:"


@dataclass(frozen=True)
class GeneratorSpec:
    """One generator: cost a*p^2 + b*p + c over 0 <= p <= p_max (MW)."""

    a: float
    b: float
    c: float
    p_max: float

    def cost(self, p: float) -> float:
        return self.a * p * p + self.b * p + self.c

    def marginal_cost(self, p: float) -> float:
        return 2.0 * self.a * p + self.b


@dataclass(frozen=True)
class AgentSpec:
    """One agent: its generators plus nominal load draws (MW)."""

    generators: tuple[GeneratorSpec, ...]
    nominal_loads: tuple[float, ...]

    @property
    def n_gens(self) -> int:
        return len(self.generators)

    @property
    def n_loads(self) -> int:
        return len(self.nominal_loads)

    @property
    def capacity(self) -> float:
        return float(sum(g.p_max for g in self.generators))

    @property
    def nominal_demand(self) -> float:
        return float(sum(self.nominal_loads))


@dataclass(frozen=True)
class CommunitySpec:
    agents: tuple[AgentSpec, ...]

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_gens(self) -> int:
        return self.agents[0].n_gens

    @property
    def n_loads(self) -> int:
        return self.agents[0].n_loads

    def cost_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(a, b, c, p_max) arrays, each shaped (n_agents, n_gens)."""
        a = np.array([[g.a for g in ag.generators] for ag in self.agents], dtype=float)
        b = np.array([[g.b for g in ag.generators] for ag in self.agents], dtype=float)
        c = np.array([[g.c for g in ag.generators] for ag in self.agents], dtype=float)
        p_max = np.array([[g.p_max for g in ag.generators] for ag in self.agents], dtype=float)
        return a, b, c, p_max

    def nominal_load_matrix(self) -> np.ndarray:
        return np.array([ag.nominal_loads for ag in self.agents], dtype=float)

    @property
    def total_capacity(self) -> float:
        return float(sum(ag.capacity for ag in self.agents))

    @property
    def total_nominal_demand(self) -> float:
        return float(sum(ag.nominal_demand for ag in self.agents))


@dataclass(eq=False)
class LoadSample:
    """One sampled realization of every agent's loads.

    values has shape (n_agents, n_loads); seed records how it was drawn.
    """

    values: np.ndarray
    seed: int
    fluctuation: float

    def agent_loads(self, i: int) -> np.ndarray:
        return self.values[i]

    def agent_demand(self, i: int) -> float:
        return float(np.sum(self.values[i]))

    @property
    def total_demand(self) -> float:
        return float(np.sum(self.values))


def validate(spec: CommunitySpec) -> None:
    """Raise a typed ValidationError when the community is malformed.

    Checks, in order: at least one agent with generators and loads, uniform
    counts across agents, convex costs (a >= 0), positive capacities,
    nonnegative loads, and total capacity covering total nominal demand.
    """
    if not spec.agents:
        raise ValidationError("community has no agents")
    first = spec.agents[0]
    if first.n_gens < 1:
        raise ValidationError("agent 0 has no generators")
    if first.n_loads < 1:
        raise ValidationError("agent 0 has no loads")
    for i, ag in enumerate(spec.agents):
        if ag.n_gens != first.n_gens or ag.n_loads != first.n_loads:
            raise NonUniformAgentsError(
                f"agent {i} has {ag.n_gens} generators / {ag.n_loads} loads, "
                f"agent 0 has {first.n_gens} / {first.n_loads}"
            )
        for g_idx, gen in enumerate(ag.generators):
            if gen.a < 0.0:
                raise NonConvexCostError(
                    f"agent {i} generator {g_idx}: negative curvature a={gen.a}"
                )
            if gen.p_max <= 0.0:
                raise ValidationError(
                    f"agent {i} generator {g_idx}: p_max must be positive, got {gen.p_max}"
                )
        for d_idx, load in enumerate(ag.nominal_loads):
            if load < 0.0:
                raise ValidationError(
                    f"agent {i} load {d_idx}: loads must be nonnegative, got {load}"
                )
    if spec.total_capacity < spec.total_nominal_demand:
        raise InfeasibleError(
            f"total capacity {spec.total_capacity} MW cannot cover "
            f"total nominal demand {spec.total_nominal_demand} MW"
        )


def sample_loads(spec: CommunitySpec, fluctuation: float, seed: int) -> LoadSample:
    """Draw loads uniformly from [(1-f)*nominal, (1+f)*nominal], elementwise.

    Pure function of (spec, fluctuation, seed): repeated calls are bitwise
    identical.  fluctuation = 0 returns the nominal values exactly.
    """
    if not 0.0 <= fluctuation < 1.0:
        raise ValueError(f"fluctuation must be in [0, 1), got {fluctuation}")
    nominal = spec.nominal_load_matrix()
    rng = np.random.default_rng(seed)
    u = rng.random(nominal.shape)  # drawn unconditionally so seed usage is uniform
    values = nominal * (1.0 - fluctuation) + nominal * (2.0 * fluctuation) * u
    return LoadSample(values=values, seed=seed, fluctuation=fluctuation)


# ---------------------------------------------------------------------------
# scenario files


def _parse_generator(data, where: str) -> GeneratorSpec:
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{where}: generator entry must be an object")
    fields = {}
    for name in ("a", "b", "c", "p_max"):
        if name not in data:
            raise ScenarioParseError(f"{where}: generator missing field {name!r}")
        try:
            fields[name] = float(data[name])
        except (TypeError, ValueError):
            raise ScenarioParseError(
                f"{where}: generator field {name!r} is not a number: {data[name]!r}"
            ) from None
    return GeneratorSpec(**fields)


def _parse_agent(data, index: int) -> AgentSpec:
    where = f"agents[{index}]"
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{where}: agent entry must be an object")
    if "generators" not in data:
        raise ScenarioParseError(f"{where}: agent missing field 'generators'")
    if "loads" not in data:
        raise ScenarioParseError(f"{where}: agent missing field 'loads'")
    gens = tuple(
        _parse_generator(g, f"{where}.generators[{k}]")
        for k, g in enumerate(data["generators"])
    )
    try:
        loads = tuple(float(x) for x in data["loads"])
    except (TypeError, ValueError):
        raise ScenarioParseError(f"{where}: field 'loads' must be a list of numbers") from None
    return AgentSpec(generators=gens, nominal_loads=loads)


def synthesize_community(
    n_agents: int,
    n_gens: int,
    n_loads: int,
    load_mw: float = 1.0,
    gen_capacity_mw: float = 2.0,
    cost_a_range: tuple[float, float] = (2.0, 6.0),
    cost_b_range: tuple[float, float] = (2.0, 10.0),
    cost_c: float = 0.0,
) -> CommunitySpec:
    """Build a uniform community with deterministically varied cost curves.

    Coefficients follow a fixed modular pattern over (agent, generator)
    indices, so the same arguments always produce the same community without
    consuming a RNG seed.
    """
    if n_agents < 1 or n_gens < 1 or n_loads < 1:
        raise ValidationError("synthesized community needs at least 1 agent, generator and load")
    a_lo, a_hi = cost_a_range
    b_lo, b_hi = cost_b_range
    agents = []
    for i in range(n_agents):
        gens = []
        for g in range(n_gens):
            mix_a = ((i * 31 + g * 17) % 97) / 96.0
            mix_b = ((i * 13 + g * 29) % 89) / 88.0
            gens.append(
                GeneratorSpec(
                    a=a_lo + (a_hi - a_lo) * mix_a,
                    b=b_lo + (b_hi - b_lo) * mix_b,
                    c=cost_c,
                    p_max=gen_capacity_mw,
                )
            )
        loads = tuple(load_mw for _ in range(n_loads))
        agents.append(AgentSpec(generators=tuple(gens), nominal_loads=loads))
    spec = CommunitySpec(agents=tuple(agents))
    validate(spec)
    return spec


def _builtin_path(name: str):
    return resources.files("dispatchbench.data").joinpath(name)


def _read_scenario_text(path) -> str:
    text_path = str(path)
    if text_path.startswith(BUILTIN_PREFIX):
        name = text_path[len(BUILTIN_PREFIX):]
        if not name.endswith(".json"):
            name += ".json"
        ref = _builtin_path(name)
        if not ref.is_file():
            raise ScenarioParseError(f"no bundled scenario named {name!r}")
        return ref.read_text(encoding="utf-8")
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioParseError(f"scenario file not found: {path}") from None
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc


def load_scenario(path) -> tuple[CommunitySpec, BenchConfig]:
    """Parse and validate a scenario file.

    ``path`` is a filesystem path, or "builtin:<name>" for a bundled scenario
    (e.g. "builtin:ieee33").  The file holds either an explicit "agents" list
    or a "synth" recipe, plus an optional "bench" section.
    """
    text = _read_scenario_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top level must be an object")

    has_agents = bool(data.get("agents"))
    has_synth = "synth" in data
    if has_agents and has_synth:
        raise ScenarioParseError(f"{path}: give either 'agents' or 'synth', not both")
    if has_agents:
        spec = CommunitySpec(
            agents=tuple(_parse_agent(a, i) for i, a in enumerate(data["agents"]))
        )
    elif has_synth:
        synth = data["synth"]
        if not isinstance(synth, dict):
            raise ScenarioParseError(f"{path}: 'synth' must be an object")
        allowed = {
            "n_agents", "n_gens", "n_loads", "load_mw", "gen_capacity_mw",
            "cost_a_range", "cost_b_range", "cost_c",
        }
        unknown = set(synth) - allowed
        if unknown:
            raise ScenarioParseError(f"{path}: unknown synth field {sorted(unknown)[0]!r}")
        kwargs = dict(synth)
        for rng_key in ("cost_a_range", "cost_b_range"):
            if rng_key in kwargs:
                lo, hi = kwargs[rng_key]
                kwargs[rng_key] = (float(lo), float(hi))
        try:
            spec = synthesize_community(**kwargs)
        except TypeError:
            raise ScenarioParseError(f"{path}: 'synth' missing n_agents/n_gens/n_loads") from None
    else:
        raise ScenarioParseError(f"{path}: scenario missing field 'agents'")

    validate(spec)
    bench_raw = data.get("bench", {})
    if not isinstance(bench_raw, dict):
        raise ScenarioParseError(f"{path}: 'bench' must be an object")
    bench = bench_config_from_mapping(bench_raw)
    return spec, bench


def write_scenario(spec: CommunitySpec, path, bench: dict | None = None) -> None:
    """Write a community (and optional raw bench mapping) as scenario JSON.

    Floats go through repr so load_scenario(write_scenario(spec)) returns an
    identical community.
    """
    data = {
        "agents": [
            {
                "generators": [
                    {"a": g.a, "b": g.b, "c": g.c, "p_max": g.p_max}
                    for g in ag.generators
                ],
                "loads": list(ag.nominal_loads),
            }
            for ag in spec.agents
        ]
    }
    if bench is not None:
        data["bench"] = bench
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
