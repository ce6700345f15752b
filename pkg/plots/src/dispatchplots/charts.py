"""Figure builders for the four benchmark views.

All builders take typed result rows and return a matplotlib Figure;
nothing here touches pyplot or a GUI backend, so rendering works
headless and savefig picks its writer from the output extension.
"""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

from dispatchplots.reader import ResultRow, ResultsError

# stable identity per setup across every chart
SETUP_ORDER = ("centralized", "distributed", "decentralized")
SETUP_COLORS = {
    "centralized": "#1f77b4",
    "distributed": "#ff7f0e",
    "decentralized": "#2ca02c",
}
_FALLBACK_COLOR = "#7f7f7f"


def _setups(rows: list[ResultRow]) -> list[str]:
    present = {r.setup for r in rows}
    ordered = [s for s in SETUP_ORDER if s in present]
    ordered += sorted(present - set(SETUP_ORDER))
    return ordered


def _color(setup: str) -> str:
    return SETUP_COLORS.get(setup, _FALLBACK_COLOR)


def _require_rows(rows: list[ResultRow]) -> None:
    if not rows:
        raise ResultsError("no rows to plot")


def _series(rows, setup: str, x_attr: str, y_attr: str):
    """Per-setup line data: y averaged over repetitions at each x."""
    pts: dict[float, list[float]] = {}
    for r in rows:
        if r.setup == setup:
            pts.setdefault(getattr(r, x_attr), []).append(getattr(r, y_attr))
    xs = np.array(sorted(pts))
    ys = np.array([np.mean(pts[x]) for x in xs])
    return xs, ys


def setup_bars(rows: list[ResultRow]) -> Figure:
    """Mean energy and carbon per setup, min-max whiskers over repetitions."""
    _require_rows(rows)
    setups = _setups(rows)
    fig = Figure(figsize=(8.0, 3.6))
    axes = fig.subplots(1, 2)
    for ax, attr, label in zip(
            axes, ("energy_kwh", "carbon_g"),
            ("energy [kWh]", "carbon [gCO2eq]")):
        values = [[getattr(r, attr) for r in rows if r.setup == s] for s in setups]
        means = np.array([np.mean(v) for v in values])
        lo = means - np.array([np.min(v) for v in values])
        hi = np.array([np.max(v) for v in values]) - means
        ax.bar(range(len(setups)), means, yerr=(lo, hi), capsize=4,
               color=[_color(s) for s in setups])
        ax.set_xticks(range(len(setups)))
        ax.set_xticklabels(setups, rotation=15)
        ax.set_ylabel(label)
        ax.grid(axis="y", alpha=0.3)
    fig.suptitle("per-iteration footprint by setup")
    fig.tight_layout()
    return fig


def size_sweep_lines(rows: list[ResultRow]) -> Figure:
    """Energy against network size, one line per setup."""
    _require_rows(rows)
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    for setup in _setups(rows):
        xs, ys = _series(rows, setup, "total_params", "energy_kwh")
        ax.plot(xs, ys, marker="o", label=setup, color=_color(setup))
    ax.set_xscale("log")
    ax.set_xlabel("total parameters")
    ax.set_ylabel("energy [kWh]")
    ax.set_title("energy versus surrogate size")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    return fig


def scalability_energy_lines(rows: list[ResultRow]) -> Figure:
    """Energy against fleet size at fixed widths, one line per setup."""
    _require_rows(rows)
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    for setup in _setups(rows):
        xs, ys = _series(rows, setup, "n_gens", "energy_kwh")
        ax.plot(xs, ys, marker="o", label=setup, color=_color(setup))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("generators per agent")
    ax.set_ylabel("energy [kWh]")
    ax.set_title("energy versus fleet size")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    return fig


def parameter_growth_lines(rows: list[ResultRow]) -> Figure:
    """Parameter totals against fleet size, one line per setup."""
    _require_rows(rows)
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    for setup in _setups(rows):
        xs, ys = _series(rows, setup, "n_gens", "total_params")
        ax.plot(xs, ys, marker="o", label=setup, color=_color(setup))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("generators per agent")
    ax.set_ylabel("total parameters")
    ax.set_title("parameter growth versus fleet size")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    return fig
