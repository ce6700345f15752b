"""Energy and carbon accounting for inference workloads.

The analytic model is linear in work: each network call costs its FLOPs
times a joules-per-FLOP rate, scaled by a width-dependent efficiency factor
(narrow hidden layers run less efficiently, factor >= 1), plus a fixed
per-call overhead.  kWh times a constant grid intensity gives gCO2eq.

The model is calibratable from measured observations by least squares, and
a wall-clock backend (elapsed seconds x device watts) exists for workloads
without a FLOP count; wall-clock reports are non-deterministic by nature.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EnergyError, UnderdeterminedError, WorkloadFailedError

JOULES_PER_KWH = 3.6e6
DEFAULT_GRID_INTENSITY = 0.476  # gCO2eq per kWh
BUILTIN_SCHEME = "builtin:"
_BUILTIN_MODELS = ("table2_calibrated",)


@dataclass(frozen=True)
class WidthBucket:
    """Efficiency factor for hidden widths up to max_width (None = no cap)."""

    max_width: float | None
    factor: float


@dataclass(frozen=True)
class EnergyModel:
    joules_per_flop: float
    per_call_overhead_j: float
    width_efficiency: tuple[WidthBucket, ...] = (WidthBucket(None, 1.0),)
    grid_intensity: float = DEFAULT_GRID_INTENSITY

    def __post_init__(self):
        if self.joules_per_flop < 0:
            raise EnergyError(f"joules_per_flop must be >= 0, got {self.joules_per_flop}")
        if self.per_call_overhead_j < 0:
            raise EnergyError(
                f"per_call_overhead_j must be >= 0, got {self.per_call_overhead_j}"
            )
        if self.grid_intensity < 0:
            raise EnergyError(f"grid_intensity must be >= 0, got {self.grid_intensity}")
        buckets = self.width_efficiency
        if not buckets:
            raise EnergyError("width_efficiency needs at least one bucket")
        if buckets[-1].max_width is not None:
            raise EnergyError("last width bucket must be uncapped (max_width None)")
        caps = [b.max_width for b in buckets[:-1]]
        if any(c is None for c in caps):
            raise EnergyError("only the last width bucket may be uncapped")
        if any(c2 <= c1 for c1, c2 in zip(caps, caps[1:])):
            raise EnergyError("width bucket caps must strictly increase")
        factors = [b.factor for b in buckets]
        if any(f < 1.0 for f in factors):
            raise EnergyError(f"efficiency factors must be >= 1, got {factors}")
        if any(f2 > f1 for f1, f2 in zip(factors, factors[1:])):
            raise EnergyError("efficiency factors must not increase with width")

    def width_factor(self, width: float) -> float:
        """Factor of the first bucket wide enough to hold ``width``."""
        for bucket in self.width_efficiency:
            if bucket.max_width is None or width <= bucket.max_width:
                return bucket.factor
        raise EnergyError(f"no width bucket covers width {width}")  # unreachable


@dataclass(frozen=True)
class EnergyReport:
    flops: int
    calls: int
    energy_kwh: float
    carbon_g: float
    backend: str = "analytic"


def estimate_energy(flops_per_call: float, calls: int, model: EnergyModel, width: float) -> float:
    """kWh for ``calls`` invocations of a net doing ``flops_per_call`` each."""
    if flops_per_call < 0:
        raise EnergyError(f"flops_per_call must be >= 0, got {flops_per_call}")
    if calls < 0:
        raise EnergyError(f"calls must be >= 0, got {calls}")
    joules_per_call = (
        flops_per_call * model.joules_per_flop * model.width_factor(width)
        + model.per_call_overhead_j
    )
    return calls * joules_per_call / JOULES_PER_KWH


def estimate_carbon(energy_kwh: float, grid_intensity: float) -> float:
    if energy_kwh < 0:
        raise EnergyError(f"energy_kwh must be >= 0, got {energy_kwh}")
    if grid_intensity < 0:
        raise EnergyError(f"grid_intensity must be >= 0, got {grid_intensity}")
    return energy_kwh * grid_intensity


def report_for_workload(
    model: EnergyModel, flops_per_call: int, calls: int, width: float
) -> EnergyReport:
    kwh = estimate_energy(flops_per_call, calls, model, width)
    return EnergyReport(
        flops=int(flops_per_call) * int(calls),
        calls=int(calls),
        energy_kwh=kwh,
        carbon_g=estimate_carbon(kwh, model.grid_intensity),
    )


def merge_reports(reports, model: EnergyModel) -> EnergyReport:
    """Associative accumulation; carbon is recomputed from total energy so
    the carbon/energy ratio stays exactly the grid intensity."""
    reports = list(reports)
    if not reports:
        return EnergyReport(flops=0, calls=0, energy_kwh=0.0, carbon_g=0.0)
    backends = {r.backend for r in reports}
    backend = backends.pop() if len(backends) == 1 else "mixed"
    total_kwh = math.fsum(r.energy_kwh for r in reports)
    return EnergyReport(
        flops=sum(r.flops for r in reports),
        calls=sum(r.calls for r in reports),
        energy_kwh=total_kwh,
        carbon_g=estimate_carbon(total_kwh, model.grid_intensity),
        backend=backend,
    )


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class Observation:
    """One measured workload: energy for a known call/FLOP/width profile."""

    setup: str
    flops_per_call: float
    calls_per_iteration: int
    width: float
    measured_kwh: float


@dataclass(frozen=True)
class CalibrationResult:
    model: EnergyModel
    residuals_kwh: tuple[float, ...]
    max_rel_error: float
    narrow_threshold: float | None
    notes: tuple[str, ...] = ()


def _fit(obs: list[Observation], threshold: float | None):
    """Least-squares in joules: e_wide, optional e_narrow, overhead."""
    narrow = [o.width <= threshold if threshold is not None else False for o in obs]
    n_cols = 3 if threshold is not None else 2
    a = np.zeros((len(obs), n_cols))
    y = np.array([o.measured_kwh * JOULES_PER_KWH for o in obs])
    for r, o in enumerate(obs):
        col = 1 if narrow[r] else 0
        a[r, col] = o.calls_per_iteration * o.flops_per_call
        a[r, -1] = o.calls_per_iteration
    coef, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    if rank < n_cols:
        raise UnderdeterminedError(
            "observations cannot separate the model parameters; vary the "
            "call counts or FLOP counts"
        )
    sse = float(np.sum((a @ coef - y) ** 2))
    return coef, sse


def calibrate(
    observations,
    grid_intensity: float = DEFAULT_GRID_INTENSITY,
) -> CalibrationResult:
    """Fit joules-per-FLOP, per-call overhead, and a two-bucket width factor.

    With three or more observations spanning at least two distinct widths,
    every split of the sorted distinct widths into a narrow and a wide
    bucket is fitted and the split with the smallest squared error wins;
    fewer observations fit a single-bucket model.  Raises Underdetermined
    when the observations cannot pin the parameters down.
    """
    obs = list(observations)
    if len(obs) < 2:
        raise UnderdeterminedError(
            f"need at least 2 observations to fit rate and overhead, got {len(obs)}"
        )
    notes: list[str] = []
    widths = sorted({o.width for o in obs})

    candidates: list[tuple[float | None, np.ndarray, float]] = []
    coef, sse = _fit(obs, None)
    candidates.append((None, coef, sse))
    if len(obs) >= 3 and len(widths) >= 2:
        for lo, hi in zip(widths[:-1], widths[1:]):
            threshold = 0.5 * (lo + hi)
            try:
                coef, sse = _fit(obs, threshold)
            except UnderdeterminedError:
                continue
            candidates.append((threshold, coef, sse))

    def usable(cand) -> bool:
        threshold, coef, _ = cand
        if coef[-1] < 0 or coef[0] < 0:
            return False
        if threshold is not None and coef[1] < coef[0]:
            return False  # narrow nets may not come out cheaper per FLOP
        return True

    usable_cands = [c for c in candidates if usable(c)]
    if not usable_cands:
        raise UnderdeterminedError(
            "every candidate fit produced a negative rate or overhead; the "
            "observations contradict the model"
        )
    threshold, coef, _ = min(usable_cands, key=lambda c: c[2])
    if threshold is None:
        buckets = (WidthBucket(None, 1.0),)
        e_wide, overhead = float(coef[0]), float(coef[1])
        if len(obs) >= 3 and len(widths) >= 2:
            notes.append("two-bucket fits rejected; single efficiency factor kept")
    else:
        e_wide, e_narrow, overhead = (float(c) for c in coef)
        factor = e_narrow / e_wide if e_wide > 0 else 1.0
        buckets = (WidthBucket(threshold, factor), WidthBucket(None, 1.0))

    model = EnergyModel(
        joules_per_flop=e_wide,
        per_call_overhead_j=overhead,
        width_efficiency=buckets,
        grid_intensity=grid_intensity,
    )
    residuals = tuple(
        estimate_energy(o.flops_per_call, o.calls_per_iteration, model, o.width)
        - o.measured_kwh
        for o in obs
    )
    max_rel = max(
        abs(r) / o.measured_kwh if o.measured_kwh else abs(r)
        for r, o in zip(residuals, obs)
    )
    return CalibrationResult(
        model=model,
        residuals_kwh=residuals,
        max_rel_error=max_rel,
        narrow_threshold=threshold,
        notes=tuple(notes),
    )


def measure_wallclock(
    workload,
    device_power_watts: float,
    grid_intensity: float = DEFAULT_GRID_INTENSITY,
) -> EnergyReport:
    """Time a callable and convert elapsed seconds x watts into a report.

    The workload may return (flops, calls) to fill those columns; anything
    else records flops=0, calls=1.  Never deterministic; keep out of
    golden-file comparisons.
    """
    if device_power_watts < 0:
        raise EnergyError(f"device_power_watts must be >= 0, got {device_power_watts}")
    start = time.perf_counter()
    try:
        outcome = workload()
    except Exception as exc:
        raise WorkloadFailedError(f"workload raised {type(exc).__name__}: {exc}") from exc
    elapsed = time.perf_counter() - start
    flops, calls = 0, 1
    if isinstance(outcome, tuple) and len(outcome) == 2:
        flops, calls = int(outcome[0]), int(outcome[1])
    kwh = elapsed * device_power_watts / JOULES_PER_KWH
    return EnergyReport(
        flops=flops,
        calls=calls,
        energy_kwh=kwh,
        carbon_g=estimate_carbon(kwh, grid_intensity),
        backend="wallclock",
    )


# ---------------------------------------------------------------------------
# serialization


def _model_to_dict(model: EnergyModel) -> dict:
    return {
        "joules_per_flop": model.joules_per_flop,
        "per_call_overhead_j": model.per_call_overhead_j,
        "grid_intensity_g_per_kwh": model.grid_intensity,
        "width_efficiency": [
            {"max_width": b.max_width, "factor": b.factor} for b in model.width_efficiency
        ],
    }


def save_energy_model(model: EnergyModel, path) -> None:
    Path(path).write_text(
        json.dumps(_model_to_dict(model), indent=2) + "\n", encoding="utf-8"
    )


def _model_from_dict(raw: dict, source: str) -> EnergyModel:
    try:
        buckets = tuple(
            WidthBucket(
                None if b["max_width"] is None else float(b["max_width"]),
                float(b["factor"]),
            )
            for b in raw["width_efficiency"]
        )
        return EnergyModel(
            joules_per_flop=float(raw["joules_per_flop"]),
            per_call_overhead_j=float(raw["per_call_overhead_j"]),
            width_efficiency=buckets,
            grid_intensity=float(raw["grid_intensity_g_per_kwh"]),
        )
    except KeyError as exc:
        raise EnergyError(f"energy model {source} missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise EnergyError(f"energy model {source} malformed: {exc}") from exc


def load_energy_model(source) -> EnergyModel:
    """Read a model from a JSON file or a ``builtin:`` name."""
    text_source = str(source)
    if text_source.startswith(BUILTIN_SCHEME):
        name = text_source[len(BUILTIN_SCHEME):]
        if name not in _BUILTIN_MODELS:
            raise EnergyError(
                f"unknown builtin energy model {name!r}; available: {_BUILTIN_MODELS}"
            )
        ref = resources.files("dispatchbench").joinpath(f"data/{name}.json")
        raw = json.loads(ref.read_text(encoding="utf-8"))
        return _model_from_dict(raw, text_source)
    path = Path(source)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise EnergyError(f"energy model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise EnergyError(f"energy model {path} is not valid JSON: {exc}") from exc
    return _model_from_dict(raw, str(path))


def table2_observations() -> tuple[Observation, ...]:
    """The three reference workloads the bundled model is calibrated from."""
    return (
        Observation("centralized", 79_611_333, 1, 6000, 0.000313),
        Observation("distributed", 2_412_611, 33, 5133, 0.000919),
        Observation("decentralized", 2_412_433, 33, 3655, 0.001049),
    )
