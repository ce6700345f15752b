"""Shared fixtures: small communities with known optima."""
import numpy as np
import pytest

from dispatchbench.grid import AgentSpec, CommunitySpec, GeneratorSpec


@pytest.fixture
def two_gen_spec() -> CommunitySpec:
    """Two single-generator agents with an interior analytic optimum.

    Minimizing p1^2 + 2 p2^2 over p1 + p2 = 3 gives p = (2, 1), cost 6,
    injections (-1, +1).
    """
    return CommunitySpec(agents=(
        AgentSpec(generators=(GeneratorSpec(1.0, 0.0, 0.0, 10.0),),
                  nominal_loads=(3.0,)),
        AgentSpec(generators=(GeneratorSpec(2.0, 0.0, 0.0, 10.0),),
                  nominal_loads=(0.0,)),
    ))


@pytest.fixture
def reference_spec() -> CommunitySpec:
    """Three 2-generator agents used by the iterative-solver checks.

    Curvatures keep the penalty rho = 1 inside both schemes' stable region
    at this agent count; loads are deliberately lopsided so the community
    actually trades.
    """
    return CommunitySpec(agents=(
        AgentSpec(generators=(GeneratorSpec(6.0, 2.0, 0.0, 6.0),
                              GeneratorSpec(8.0, 1.0, 0.0, 5.0)),
                  nominal_loads=(4.0,)),
        AgentSpec(generators=(GeneratorSpec(7.0, 0.5, 0.0, 6.0),
                              GeneratorSpec(10.0, 3.0, 0.0, 4.0)),
                  nominal_loads=(6.0,)),
        AgentSpec(generators=(GeneratorSpec(9.0, 1.5, 0.0, 5.0),
                              GeneratorSpec(6.4, 2.5, 0.0, 6.0)),
                  nominal_loads=(2.0,)),
    ))


@pytest.fixture
def reference_loads(reference_spec) -> np.ndarray:
    return reference_spec.nominal_load_matrix()
