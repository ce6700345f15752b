"""Experiment harness: runs the benchmark suites and emits result CSVs.

Four experiments share one row schema:

- equal-params: size every setup to the same parameter budget, run one
  communication round of inference per repetition, account the energy;
- size-sweep: energy versus hidden width, closed form per (setup, width);
- scal-sweep: parameters and energy versus generator count at fixed widths;
- week: 4 inference events per hour for a week (672), loads resampled per
  event, surrogate rounds executed with the live dual arithmetic.

Rows sort by their full column tuple before writing, so output bytes never
depend on scheduling; floats are quantized to 12 significant digits when a
row is built, which makes emit/parse an exact round trip.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from .config import REFERENCE_HIDDEN, BenchConfig
from .energy import EnergyModel, EnergyReport, merge_reports, report_for_workload
from .errors import ConfigError, ResultParseError
from .grid import CommunitySpec, sample_loads
from .solvers import message_stats
from .surrogates import (
    SetupDims,
    build_surrogate,
    nearest_hidden_nodes,
    flops_per_call,
    param_count,
    run_surrogate_rounds,
    setup_dims,
)

WEEK_EVENTS = 4 * 24 * 7  # quarter-hourly for seven days

#: generator counts for the scalability sweep; spans the parameter-count
#: crossover near 100 and the later energy crossover driven by per-call
#: overhead amortization
DEFAULT_GEN_COUNTS = (10, 50, 100, 200, 500, 1000, 2000, 5000)

DEFAULT_HIDDEN_SWEEP = (500, 1000, 2000)


def _quant12(value: float) -> float:
    """Round to 12 significant digits, the precision the CSVs carry."""
    return float(f"{float(value):.12g}")


@dataclass(frozen=True, order=True)
class BenchRow:
    experiment: str
    setup: str
    n_agents: int
    n_gens: int
    hidden: int
    total_params: int
    flops: int
    calls: int
    energy_kwh: float
    carbon_g: float
    messages: int
    repetition: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "energy_kwh", _quant12(self.energy_kwh))
        object.__setattr__(self, "carbon_g", _quant12(self.carbon_g))


COLUMNS = tuple(f.name for f in fields(BenchRow))
_INT_COLUMNS = {
    "n_agents", "n_gens", "hidden", "total_params", "flops", "calls",
    "messages", "repetition", "seed",
}
_FLOAT_COLUMNS = {"energy_kwh", "carbon_g"}


def sort_rows(rows) -> list[BenchRow]:
    return sorted(rows)


def _format_value(name: str, value) -> str:
    if name in _FLOAT_COLUMNS:
        return f"{value:.12g}"
    return str(value)


def emit_csv(rows, dest) -> None:
    """Write rows sorted by the full column tuple; bytes are deterministic."""
    ordered = sort_rows(rows)

    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in ordered:
            writer.writerow(
                _format_value(name, getattr(row, name)) for name in COLUMNS
            )

    if hasattr(dest, "write"):
        _write(dest)
    else:
        with Path(dest).open("w", newline="", encoding="utf-8") as fh:
            _write(fh)


def rows_to_csv_bytes(rows) -> bytes:
    buffer = io.StringIO()
    emit_csv(rows, buffer)
    return buffer.getvalue().encode("utf-8")


def parse_csv(src) -> list[BenchRow]:
    """Read rows back; errors name the missing or malformed column."""
    if hasattr(src, "read"):
        reader = csv.reader(src)
        return _parse_rows(reader, getattr(src, "name", "<stream>"))
    with Path(src).open("r", newline="", encoding="utf-8") as fh:
        return _parse_rows(csv.reader(fh), str(src))


def _parse_rows(reader, source: str) -> list[BenchRow]:
    try:
        header = next(reader)
    except StopIteration:
        raise ResultParseError(f"{source}: empty results file, no header") from None
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ResultParseError(f"{source}: missing column '{missing[0]}'")
    extra = [c for c in header if c not in COLUMNS]
    if extra:
        raise ResultParseError(f"{source}: unexpected column '{extra[0]}'")
    index = {name: header.index(name) for name in COLUMNS}
    rows = []
    for line_no, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise ResultParseError(
                f"{source}: line {line_no} has {len(record)} fields, expected {len(header)}"
            )
        kwargs = {}
        for name in COLUMNS:
            raw = record[index[name]]
            try:
                if name in _INT_COLUMNS:
                    kwargs[name] = int(raw)
                elif name in _FLOAT_COLUMNS:
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            except ValueError:
                raise ResultParseError(
                    f"{source}: line {line_no}, column '{name}': bad value {raw!r}"
                ) from None
        rows.append(BenchRow(**kwargs))
    return rows


# ---------------------------------------------------------------------------
# experiments


def _hidden_for(config: BenchConfig, dims: SetupDims) -> int:
    if config.target_params is not None:
        return nearest_hidden_nodes(dims, config.target_params)
    hidden = config.hidden_per_setup.get(dims.setup)
    if hidden is None:
        raise ConfigError(
            f"no hidden width for setup {dims.setup!r}: set target_params or "
            f"hidden_per_setup"
        )
    return hidden


def _analytic_row(
    experiment: str,
    dims: SetupDims,
    hidden: int,
    model: EnergyModel,
    rounds: int,
    repetition: int,
    seed: int,
) -> BenchRow:
    calls = dims.network_count * rounds
    per_call = flops_per_call(dims, hidden)
    report = report_for_workload(model, per_call, calls, hidden)
    return BenchRow(
        experiment=experiment,
        setup=dims.setup,
        n_agents=dims.n_agents,
        n_gens=dims.n_gens,
        hidden=hidden,
        total_params=param_count(dims, hidden),
        flops=report.flops,
        calls=report.calls,
        energy_kwh=report.energy_kwh,
        carbon_g=report.carbon_g,
        messages=message_stats(dims.setup, dims.n_agents, rounds).messages,
        repetition=repetition,
        seed=seed,
    )


def _map_cells(worker, cells, jobs: int):
    """Run independent cells, optionally on threads; order is preserved."""
    if jobs <= 1 or len(cells) <= 1:
        return [worker(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, cells))


def run_equal_params(
    spec: CommunitySpec,
    config: BenchConfig,
    model: EnergyModel,
    jobs: int = 1,
) -> list[BenchRow]:
    """Same parameter budget for every setup, one communication round each.

    Per repetition the loads are resampled (seed + repetition index) and the
    built networks execute their calls for real; energy comes from the
    analytic model over the counted calls.  Networks are built once per
    setup and shared read-only across repetitions.
    """
    if config.target_params is None:
        raise ConfigError("equal-params experiment needs target_params")
    rows: list[BenchRow] = []
    for setup in config.setups:
        dims = setup_dims(setup, spec.n_agents, spec.n_loads, spec.n_gens)
        hidden = nearest_hidden_nodes(dims, config.target_params)
        nets = build_surrogate(dims, hidden, seed=config.seed)
        per_call = flops_per_call(dims, hidden)
        messages = message_stats(setup, dims.n_agents, config.surrogate_rounds).messages

        def cell(rep: int) -> BenchRow:
            rep_seed = config.seed + rep
            loads = sample_loads(spec, config.fluctuation, rep_seed)
            _, calls = run_surrogate_rounds(
                spec, setup, nets, loads,
                rounds=config.surrogate_rounds, rho=config.rho,
            )
            report = report_for_workload(model, per_call, calls, hidden)
            return BenchRow(
                experiment=config.experiment,
                setup=setup,
                n_agents=dims.n_agents,
                n_gens=dims.n_gens,
                hidden=hidden,
                total_params=param_count(dims, hidden),
                flops=report.flops,
                calls=report.calls,
                energy_kwh=report.energy_kwh,
                carbon_g=report.carbon_g,
                messages=messages,
                repetition=rep,
                seed=rep_seed,
            )

        rows.extend(_map_cells(cell, list(range(config.repetitions)), jobs))
        del nets  # free the weight matrices before sizing the next setup
    return sort_rows(rows)


def run_size_sweep(
    spec: CommunitySpec,
    config: BenchConfig,
    model: EnergyModel,
) -> list[BenchRow]:
    """One closed-form row per (setup, hidden width)."""
    widths = config.hidden_nodes or DEFAULT_HIDDEN_SWEEP
    rows = []
    for setup in config.setups:
        dims = setup_dims(setup, spec.n_agents, spec.n_loads, spec.n_gens)
        for hidden in widths:
            rows.append(
                _analytic_row(
                    config.experiment, dims, hidden, model,
                    config.surrogate_rounds, 0, config.seed,
                )
            )
    return sort_rows(rows)


def run_scalability_sweep(
    config: BenchConfig,
    model: EnergyModel,
    n_agents: int = 33,
    n_loads: int = 100,
) -> list[BenchRow]:
    """Parameters and energy versus generator count at fixed hidden widths.

    Hidden widths come from hidden_per_setup (reference widths by default)
    and stay fixed across the sweep, so parameter growth per generator is
    the centralized width times n_agents against the per-agent width times
    n_agents, which flips the ordering as generators are added.
    """
    counts = config.gen_counts or DEFAULT_GEN_COUNTS
    rows = []
    for setup in config.setups:
        hidden = config.hidden_per_setup.get(setup, REFERENCE_HIDDEN[setup])
        for n_gens in counts:
            dims = setup_dims(setup, n_agents, n_loads, n_gens)
            rows.append(
                _analytic_row(
                    config.experiment, dims, hidden, model,
                    config.surrogate_rounds, 0, config.seed,
                )
            )
    return sort_rows(rows)


def run_week_simulation(
    spec: CommunitySpec,
    config: BenchConfig,
    model: EnergyModel,
    jobs: int = 1,
) -> tuple[EnergyReport, list[BenchRow]]:
    """Simulate a week of quarter-hourly inference events per setup.

    Event e samples its loads with seed + e and runs the setup's surrogate
    rounds from a cold start.  Per-setup rows aggregate all 672 events;
    the returned report merges every event across setups.
    """
    rows: list[BenchRow] = []
    all_reports: list[EnergyReport] = []
    for setup in config.setups:
        dims = setup_dims(setup, spec.n_agents, spec.n_loads, spec.n_gens)
        hidden = _hidden_for(config, dims)
        nets = build_surrogate(dims, hidden, seed=config.seed)
        per_call = flops_per_call(dims, hidden)

        def cell(event: int) -> EnergyReport:
            loads = sample_loads(spec, config.fluctuation, config.seed + event)
            _, calls = run_surrogate_rounds(
                spec, setup, nets, loads,
                rounds=config.surrogate_rounds, rho=config.rho,
            )
            return report_for_workload(model, per_call, calls, hidden)

        event_reports = _map_cells(cell, list(range(WEEK_EVENTS)), jobs)
        merged = merge_reports(event_reports, model)
        all_reports.extend(event_reports)
        per_round = message_stats(setup, dims.n_agents, config.surrogate_rounds).messages
        rows.append(
            BenchRow(
                experiment=config.experiment,
                setup=setup,
                n_agents=dims.n_agents,
                n_gens=dims.n_gens,
                hidden=hidden,
                total_params=param_count(dims, hidden),
                flops=merged.flops,
                calls=merged.calls,
                energy_kwh=merged.energy_kwh,
                carbon_g=merged.carbon_g,
                messages=per_round * WEEK_EVENTS,
                repetition=0,
                seed=config.seed,
            )
        )
        del nets
    return merge_reports(all_reports, model), sort_rows(rows)


def summarize(rows) -> str:
    """Plain-text digest of a results CSV, grouped by experiment and setup."""
    if not rows:
        return "no rows"
    groups: dict[tuple[str, str], list[BenchRow]] = {}
    for row in sort_rows(rows):
        groups.setdefault((row.experiment, row.setup), []).append(row)
    header = (
        f"{'experiment':<12} {'setup':<14} {'rows':>5} {'hidden':>12} "
        f"{'energy_kwh':>14} {'carbon_g':>14} {'messages':>10}"
    )
    lines = [header, "-" * len(header)]
    for (experiment, setup), members in groups.items():
        hiddens = sorted({r.hidden for r in members})
        hidden_txt = (
            str(hiddens[0]) if len(hiddens) == 1 else f"{hiddens[0]}..{hiddens[-1]}"
        )
        energy = sum(r.energy_kwh for r in members)
        carbon = sum(r.carbon_g for r in members)
        messages = sum(r.messages for r in members)
        lines.append(
            f"{experiment:<12} {setup:<14} {len(members):>5} {hidden_txt:>12} "
            f"{energy:>14.6g} {carbon:>14.6g} {messages:>10}"
        )
    return "\n".join(lines)
