"""Exception hierarchy shared across the package.

Every error raised deliberately by this package derives from DispatchError so
callers (including the CLI) can catch one base class and map it to a
diagnostic plus a nonzero exit code.
"""


class DispatchError(Exception):
    """Base class for all errors raised by this package."""

    #: coarse origin label used by CLI diagnostics
    component = "dispatchbench"


class ValidationError(DispatchError):
    """A community specification violates a structural requirement."""

    component = "grid"


class InfeasibleError(ValidationError):
    """Total demand cannot be met by total generation capacity."""


class NonUniformAgentsError(ValidationError):
    """Agents do not share identical generator and load counts."""


class NonConvexCostError(ValidationError):
    """A generator cost has negative curvature."""


class ScenarioParseError(DispatchError):
    """A scenario or config file is malformed; message names the field."""

    component = "grid"


class ConfigError(DispatchError):
    """A benchmark configuration value is out of range or inconsistent."""

    component = "bench"


class BenchError(DispatchError):
    component = "bench"


class ResultParseError(BenchError):
    """A results CSV is malformed; message names the offending column."""


class SolverError(DispatchError):
    component = "solvers"


class NonConvergedError(SolverError):
    """An iterative solver exhausted max_iter before meeting tolerance.

    Carries the solver state; ``trace`` exposes the per-iteration residual
    history so callers can inspect how far the run got.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state

    @property
    def trace(self):
        return getattr(self.state, "trace", None)


class SolverFailedError(SolverError):
    """A downstream consumer could not obtain the solver labels it needs."""


class SurrogateError(DispatchError):
    component = "surrogates"


class DimensionMismatchError(SurrogateError):
    """An input, network, or dataset has the wrong shape for the setup."""


class TargetTooSmallError(SurrogateError):
    """No positive hidden width fits under the requested parameter budget."""


class EnergyError(DispatchError):
    component = "energy"


class UnderdeterminedError(EnergyError):
    """Too few (or degenerate) observations to fit the energy model."""


class WorkloadFailedError(EnergyError):
    """A measured workload raised instead of completing."""
