"""Multi-agent power-dispatch simulation and benchmarking.

Exact quadratic dispatch under three coordination topologies (centralized,
price-coordinated distributed, peer-to-peer decentralized), neural
surrogates sized and trained to stand in for each one, and an energy and
carbon accounting harness for comparing their inference costs.
"""

from .bench import (
    BenchRow,
    emit_csv,
    parse_csv,
    run_equal_params,
    run_scalability_sweep,
    run_size_sweep,
    run_week_simulation,
    summarize,
)
from .config import BenchConfig, SETUPS
from .energy import (
    EnergyModel,
    EnergyReport,
    Observation,
    WidthBucket,
    calibrate,
    estimate_carbon,
    estimate_energy,
    load_energy_model,
    measure_wallclock,
    merge_reports,
    save_energy_model,
)
from .errors import (
    BenchError,
    ConfigError,
    DimensionMismatchError,
    DispatchError,
    EnergyError,
    InfeasibleError,
    NonConvergedError,
    ResultParseError,
    ScenarioParseError,
    SolverError,
    SurrogateError,
    TargetTooSmallError,
    UnderdeterminedError,
    ValidationError,
)
from .grid import (
    AgentSpec,
    CommunitySpec,
    GeneratorSpec,
    LoadSample,
    load_scenario,
    sample_loads,
    synthesize_community,
    validate,
    write_scenario,
)
from .solvers import (
    DispatchSolution,
    MessageStats,
    community_objective,
    message_stats,
    run_decentralized,
    run_distributed,
    solve_centralized,
)
from .surrogates import (
    ImitationDataset,
    SolverSettings,
    TrainSettings,
    InferenceResult,
    MlpSurrogate,
    SetupDims,
    ViolationReport,
    build_surrogate,
    equalize_hidden_nodes,
    flops_per_call,
    forward,
    generate_dataset,
    infer_dispatch,
    load_dataset,
    load_network,
    nearest_hidden_nodes,
    param_count,
    run_surrogate_rounds,
    save_dataset,
    save_network,
    setup_dims,
    train,
)

__version__ = "1.0.0"

__all__ = [
    "AgentSpec",
    "BenchConfig",
    "BenchError",
    "BenchRow",
    "CommunitySpec",
    "ConfigError",
    "DimensionMismatchError",
    "DispatchError",
    "DispatchSolution",
    "EnergyError",
    "EnergyModel",
    "EnergyReport",
    "GeneratorSpec",
    "ImitationDataset",
    "InferenceResult",
    "InfeasibleError",
    "LoadSample",
    "MessageStats",
    "MlpSurrogate",
    "NonConvergedError",
    "Observation",
    "ResultParseError",
    "ScenarioParseError",
    "SETUPS",
    "SetupDims",
    "SolverError",
    "SolverSettings",
    "SurrogateError",
    "TargetTooSmallError",
    "TrainSettings",
    "UnderdeterminedError",
    "ValidationError",
    "ViolationReport",
    "WidthBucket",
    "build_surrogate",
    "calibrate",
    "community_objective",
    "emit_csv",
    "equalize_hidden_nodes",
    "estimate_carbon",
    "estimate_energy",
    "flops_per_call",
    "forward",
    "generate_dataset",
    "infer_dispatch",
    "load_dataset",
    "load_energy_model",
    "load_network",
    "load_scenario",
    "measure_wallclock",
    "merge_reports",
    "message_stats",
    "nearest_hidden_nodes",
    "param_count",
    "parse_csv",
    "run_decentralized",
    "run_distributed",
    "run_equal_params",
    "run_scalability_sweep",
    "run_size_sweep",
    "run_surrogate_rounds",
    "run_week_simulation",
    "sample_loads",
    "save_dataset",
    "save_energy_model",
    "save_network",
    "setup_dims",
    "solve_centralized",
    "summarize",
    "synthesize_community",
    "train",
    "validate",
    "write_scenario",
]
