"""Typed reader for benchmark result CSVs.

The results schema is a fixed 13-column table; this reader validates the
header and every cell and names the offending column or line in its
diagnostics, so a truncated or hand-edited file fails loudly instead of
producing an empty or misleading chart.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

COLUMNS = (
    "experiment",
    "setup",
    "n_agents",
    "n_gens",
    "hidden",
    "total_params",
    "flops",
    "calls",
    "energy_kwh",
    "carbon_g",
    "messages",
    "repetition",
    "seed",
)

_INT_COLUMNS = frozenset(
    ("n_agents", "n_gens", "hidden", "total_params", "flops", "calls",
     "messages", "repetition", "seed"))
_FLOAT_COLUMNS = frozenset(("energy_kwh", "carbon_g"))


class ResultsError(Exception):
    """A results file that cannot be charted."""


@dataclass(frozen=True)
class ResultRow:
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


def _typed(name: str, raw: str, path, line_no: int):
    try:
        if name in _INT_COLUMNS:
            return int(raw)
        if name in _FLOAT_COLUMNS:
            return float(raw)
    except ValueError:
        raise ResultsError(
            f"{path} line {line_no}: bad value for '{name}': {raw!r}") from None
    return raw


def read_results(path) -> list[ResultRow]:
    """Read and type-check a results CSV; any defect names its column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ResultsError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ResultsError(f"{path}: empty results file, no header")
    header = next(csv.reader([lines[0]]))
    for name in COLUMNS:
        if name not in header:
            raise ResultsError(f"{path}: missing column '{name}'")
    for name in header:
        if name not in COLUMNS:
            raise ResultsError(f"{path}: unexpected column '{name}'")
    rows = []
    for line_no, record in enumerate(csv.reader(lines[1:]), start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise ResultsError(
                f"{path} line {line_no}: expected {len(header)} values, "
                f"got {len(record)}")
        cells = dict(zip(header, record))
        rows.append(ResultRow(**{
            name: _typed(name, cells[name], path, line_no) for name in COLUMNS}))
    if not rows:
        raise ResultsError(f"{path}: no result rows after the header")
    return rows
