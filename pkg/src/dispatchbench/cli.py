"""Command-line entry point.

Verbs: solve (run one dispatch), train (fit surrogates), bench (run a
harness experiment), calibrate (fit an energy model), report (summarize a
results CSV).  Exit codes: 0 success, 1 runtime failure with a diagnostic
naming the failing component, 2 usage error.  Diagnostics go to stderr,
data to stdout or to files under the explicit --out directory.

Seed precedence, lowest to highest: scenario file, DISPATCH_SEED, --seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .energy import (
    DEFAULT_GRID_INTENSITY,
    Observation,
    calibrate,
    load_energy_model,
    save_energy_model,
)
from .errors import DispatchError, EnergyError
from .grid import load_scenario, sample_loads
from .solvers import (
    run_decentralized,
    run_distributed,
    solve_centralized,
    write_trace_csv,
)
from .surrogates import (
    SolverSettings,
    TrainSettings,
    build_surrogate,
    generate_dataset,
    save_dataset,
    save_network,
    setup_dims,
    train,
)

_EXPERIMENT_TAGS = {
    "table2": "table2",
    "size-sweep": "size_sweep",
    "scal-sweep": "scal_sweep",
    "week": "week",
}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario_and_config(args, **overrides):
    spec, config = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return spec, config.with_overrides(**overrides)


def _print_solution(mode: str, spec, solution, iterations=None) -> None:
    print(f"mode: {mode}")
    print(f"agents: {spec.n_agents}  generators_per_agent: {spec.n_gens}")
    print(f"objective: {solution.objective:.10g}")
    print(f"balance_residual: {solution.balance_residual:.6g}")
    if iterations is not None:
        print(f"iterations: {iterations}")
    injections = " ".join(f"{v:.10g}" for v in solution.p_o)
    print(f"injections: {injections}")


def _cmd_solve(args) -> int:
    spec, config = _scenario_and_config(
        args, rho=args.rho, tol=args.tol, max_iter=args.max_iter,
        fluctuation=args.fluctuation,
    )
    loads = sample_loads(spec, config.fluctuation, config.seed)
    if args.mode == "centralized":
        solution = solve_centralized(spec, loads)
        _print_solution(args.mode, spec, solution)
        return 0
    runner = run_distributed if args.mode == "distributed" else run_decentralized
    solution, state = runner(
        spec, loads, rho=config.rho, tol=config.tol, max_iter=config.max_iter
    )
    _print_solution(args.mode, spec, solution, iterations=state.k)
    if args.out is not None:
        trace_path = _out_dir(args) / f"trace_{args.mode}.csv"
        write_trace_csv(state.trace, trace_path)
        print(f"trace: {trace_path}", file=sys.stderr)
    return 0


def _cmd_train(args) -> int:
    spec, config = _scenario_and_config(
        args, rho=args.rho, tol=args.tol, max_iter=args.max_iter,
        fluctuation=args.fluctuation,
    )
    out = _out_dir(args)
    settings = SolverSettings(
        rho=config.rho, tol=config.tol, max_iter=config.max_iter,
        fluctuation=config.fluctuation,
    )
    dataset = generate_dataset(spec, args.mode, args.samples, settings, config.seed)
    save_dataset(dataset, out / f"dataset_{args.mode}.csv", spec)

    dims = setup_dims(args.mode, spec.n_agents, spec.n_loads, spec.n_gens)
    nets = build_surrogate(dims, args.hidden, seed=config.seed)
    history = train(
        nets,
        dataset,
        TrainSettings(
            epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.learning_rate, seed=config.seed,
        ),
    )

    net_list = nets if isinstance(nets, list) else [nets]
    for idx, net in enumerate(net_list):
        save_network(net, out / f"network_{args.mode}_{idx:03d}.npz")
    with (out / f"loss_{args.mode}.csv").open("w", encoding="utf-8") as fh:
        fh.write("epoch," + ",".join(f"net_{i}" for i in range(len(net_list))) + "\n")
        for epoch in range(history.shape[0]):
            cells = ",".join(f"{v:.12g}" for v in history[epoch])
            fh.write(f"{epoch},{cells}\n")
    final = history[-1][~np.isnan(history[-1])]
    mean_final = float(final.mean()) if final.size else float("nan")
    print(f"trained {len(net_list)} network(s), rows: {dataset.n_rows}, "
          f"final_loss: {mean_final:.6g}")
    return 0


def _cmd_bench(args) -> int:
    spec, config = _scenario_and_config(
        args,
        experiment=_EXPERIMENT_TAGS[args.experiment],
        fluctuation=args.fluctuation,
        repetitions=args.repetitions,
        target_params=args.target_params,
        hidden_nodes=tuple(args.hidden_nodes) if args.hidden_nodes else None,
        gen_counts=tuple(args.gen_counts) if args.gen_counts else None,
        surrogate_rounds=args.rounds,
        energy_model=args.energy_model,
        rho=args.rho,
    )
    model = load_energy_model(config.energy_model)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    out = _out_dir(args)

    if args.experiment == "table2":
        rows = bench_mod.run_equal_params(spec, config, model, jobs=jobs)
    elif args.experiment == "size-sweep":
        rows = bench_mod.run_size_sweep(spec, config, model)
    elif args.experiment == "scal-sweep":
        rows = bench_mod.run_scalability_sweep(
            config, model, n_agents=spec.n_agents, n_loads=spec.n_loads
        )
    else:
        aggregate, rows = bench_mod.run_week_simulation(spec, config, model, jobs=jobs)
        print(f"week_total_energy_kwh: {aggregate.energy_kwh:.12g}")
        print(f"week_total_carbon_g: {aggregate.carbon_g:.12g}")

    csv_path = out / f"{config.experiment}.csv"
    bench_mod.emit_csv(rows, csv_path)
    print(bench_mod.summarize(rows))
    print(f"results: {csv_path}", file=sys.stderr)
    return 0


def _cmd_calibrate(args) -> int:
    try:
        raw = json.loads(Path(args.observations).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise EnergyError(f"observations file not found: {args.observations}") from None
    except json.JSONDecodeError as exc:
        raise EnergyError(f"observations file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise EnergyError("observations file must hold a JSON list")
    observations = []
    for i, entry in enumerate(raw):
        try:
            observations.append(
                Observation(
                    setup=str(entry["setup"]),
                    flops_per_call=float(entry["flops_per_call"]),
                    calls_per_iteration=int(entry["calls_per_iteration"]),
                    width=float(entry["width"]),
                    measured_kwh=float(entry["measured_kwh"]),
                )
            )
        except KeyError as exc:
            raise EnergyError(f"observation {i} missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise EnergyError(f"observation {i} malformed: {exc}") from exc
    result = calibrate(observations, grid_intensity=args.intensity)
    payload = {
        "joules_per_flop": result.model.joules_per_flop,
        "per_call_overhead_j": result.model.per_call_overhead_j,
        "grid_intensity_g_per_kwh": result.model.grid_intensity,
        "width_efficiency": [
            {"max_width": b.max_width, "factor": b.factor}
            for b in result.model.width_efficiency
        ],
        "max_rel_error": result.max_rel_error,
        "residuals_kwh": list(result.residuals_kwh),
    }
    print(json.dumps(payload, indent=2))
    if args.out is not None:
        model_path = _out_dir(args) / "energy_model.json"
        save_energy_model(result.model, model_path)
        print(f"model: {model_path}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    rows = bench_mod.parse_csv(args.csv)
    print(bench_mod.summarize(rows))
    return 0


def _add_seed(parser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario and DISPATCH_SEED seeds")


def _add_solver_flags(parser) -> None:
    parser.add_argument("--rho", type=float, default=None, help="penalty parameter")
    parser.add_argument("--tol", type=float, default=None, help="stopping tolerance")
    parser.add_argument("--max-iter", type=int, default=None, dest="max_iter",
                        help="iteration cap")
    parser.add_argument("--fluctuation", type=float, default=None,
                        help="relative load fluctuation in [0, 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dispatchbench",
        description="Power-dispatch solvers, neural stand-ins, and an "
                    "energy-accounting benchmark harness.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    p_solve = verbs.add_parser("solve", help="solve one dispatch scenario")
    p_solve.add_argument("--scenario", required=True,
                         help="scenario JSON path or builtin:<name>")
    p_solve.add_argument("--mode", required=True,
                         choices=("centralized", "distributed", "decentralized"))
    _add_solver_flags(p_solve)
    _add_seed(p_solve)
    p_solve.add_argument("--out", default=None,
                         help="directory for the iteration trace CSV")
    p_solve.set_defaults(func=_cmd_solve)

    p_train = verbs.add_parser("train", help="train surrogate networks")
    p_train.add_argument("--scenario", required=True)
    p_train.add_argument("--mode", required=True,
                         choices=("centralized", "distributed", "decentralized"))
    p_train.add_argument("--samples", type=int, required=True,
                         help="number of load scenarios to label")
    p_train.add_argument("--epochs", type=int, required=True)
    p_train.add_argument("--hidden", type=int, default=64,
                         help="hidden width of the trained networks")
    p_train.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p_train.add_argument("--learning-rate", type=float, default=0.01,
                         dest="learning_rate")
    _add_solver_flags(p_train)
    _add_seed(p_train)
    p_train.add_argument("--out", required=True,
                         help="directory for networks, dataset, and loss CSV")
    p_train.set_defaults(func=_cmd_train)

    p_bench = verbs.add_parser("bench", help="run a benchmark experiment")
    p_bench.add_argument("experiment",
                         choices=("table2", "size-sweep", "scal-sweep", "week"))
    p_bench.add_argument("--config", required=True, dest="scenario",
                         help="scenario+bench JSON path or builtin:<name>")
    p_bench.add_argument("--repetitions", type=int, default=None)
    p_bench.add_argument("--fluctuation", type=float, default=None)
    p_bench.add_argument("--target-params", type=int, default=None,
                         dest="target_params")
    p_bench.add_argument("--hidden-nodes", type=int, nargs="+", default=None,
                         dest="hidden_nodes", help="widths for the size sweep")
    p_bench.add_argument("--gen-counts", type=int, nargs="+", default=None,
                         dest="gen_counts", help="generator counts for the "
                         "scalability sweep")
    p_bench.add_argument("--rounds", type=int, default=None,
                         help="surrogate communication rounds per event")
    p_bench.add_argument("--energy-model", default=None, dest="energy_model",
                         help="energy model path or builtin:<name>")
    p_bench.add_argument("--rho", type=float, default=None)
    p_bench.add_argument("--jobs", type=int, default=None,
                         help="worker threads (default: all execution units)")
    _add_seed(p_bench)
    p_bench.add_argument("--out", required=True, help="directory for result CSVs")
    p_bench.set_defaults(func=_cmd_bench)

    p_cal = verbs.add_parser("calibrate", help="fit an energy model")
    p_cal.add_argument("--observations", required=True,
                       help="JSON list of measured workloads")
    p_cal.add_argument("--intensity", type=float, default=DEFAULT_GRID_INTENSITY,
                       help="grid carbon intensity in gCO2eq per kWh")
    p_cal.add_argument("--out", default=None,
                       help="directory for the fitted model file")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_report = verbs.add_parser("report", help="summarize a results CSV")
    p_report.add_argument("--csv", required=True)
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DispatchError as exc:
        print(f"error [{exc.component}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
