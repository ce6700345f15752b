import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispatchbench.config import BenchConfig
from dispatchbench.errors import (
    InfeasibleError,
    NonConvexCostError,
    NonUniformAgentsError,
    ScenarioParseError,
    ValidationError,
)
from dispatchbench.grid import (
    AgentSpec,
    CommunitySpec,
    GeneratorSpec,
    load_scenario,
    sample_loads,
    synthesize_community,
    validate,
    write_scenario,
)


def _agent(a=1.0, b=0.0, c=0.0, p_max=5.0, loads=(1.0,)):
    return AgentSpec(generators=(GeneratorSpec(a, b, c, p_max),), nominal_loads=tuple(loads))


class TestGeneratorSpec:
    def test_cost_quadratic(self):
        g = GeneratorSpec(2.0, 3.0, 1.0, 10.0)
        assert g.cost(0.0) == 1.0
        assert g.cost(2.0) == 2.0 * 4.0 + 3.0 * 2.0 + 1.0
        assert g.marginal_cost(2.0) == 2.0 * 2.0 * 2.0 + 3.0

    def test_cost_at_capacity(self):
        g = GeneratorSpec(0.5, 1.0, 0.0, 4.0)
        assert g.cost(4.0) == 0.5 * 16 + 4.0


class TestValidate:
    def test_valid_community_passes(self, reference_spec):
        validate(reference_spec)

    def test_empty_community_rejected(self):
        with pytest.raises(ValidationError):
            validate(CommunitySpec(agents=()))

    def test_nonuniform_generator_counts_rejected(self):
        spec = CommunitySpec(agents=(
            _agent(),
            AgentSpec(
                generators=(GeneratorSpec(1, 0, 0, 5), GeneratorSpec(1, 0, 0, 5)),
                nominal_loads=(1.0,),
            ),
        ))
        with pytest.raises(NonUniformAgentsError):
            validate(spec)

    def test_nonuniform_load_counts_rejected(self):
        spec = CommunitySpec(agents=(_agent(loads=(1.0,)), _agent(loads=(0.5, 0.5))))
        with pytest.raises(NonUniformAgentsError):
            validate(spec)

    def test_negative_curvature_rejected(self):
        with pytest.raises(NonConvexCostError):
            validate(CommunitySpec(agents=(_agent(a=-0.1),)))

    def test_nonpositive_capacity_rejected(self):
        with pytest.raises(ValidationError):
            validate(CommunitySpec(agents=(_agent(p_max=0.0),)))

    def test_negative_load_rejected(self):
        with pytest.raises(ValidationError):
            validate(CommunitySpec(agents=(_agent(loads=(-1.0,)),)))

    def test_demand_above_capacity_rejected(self):
        with pytest.raises(InfeasibleError):
            validate(CommunitySpec(agents=(_agent(p_max=2.0, loads=(3.0,)),)))


class TestSampleLoads:
    def test_zero_fluctuation_gives_nominal(self, reference_spec):
        sample = sample_loads(reference_spec, 0.0, seed=9)
        assert np.array_equal(sample.values, reference_spec.nominal_load_matrix())

    def test_same_seed_same_values(self, reference_spec):
        one = sample_loads(reference_spec, 0.3, seed=4)
        two = sample_loads(reference_spec, 0.3, seed=4)
        assert np.array_equal(one.values, two.values)

    def test_different_seeds_differ(self, reference_spec):
        one = sample_loads(reference_spec, 0.3, seed=4)
        two = sample_loads(reference_spec, 0.3, seed=5)
        assert not np.array_equal(one.values, two.values)

    @settings(max_examples=40, deadline=None)
    @given(
        fluctuation=st.floats(min_value=0.0, max_value=0.95),
        seed=st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_samples_stay_inside_band(self, fluctuation, seed):
        spec = CommunitySpec(agents=(
            _agent(loads=(2.0, 0.5)), _agent(loads=(1.0, 3.0)),
        ))
        sample = sample_loads(spec, fluctuation, seed)
        nominal = spec.nominal_load_matrix()
        assert np.all(sample.values >= nominal * (1 - fluctuation) - 1e-12)
        assert np.all(sample.values <= nominal * (1 + fluctuation) + 1e-12)

    def test_total_demand_matches_sum(self, reference_spec):
        sample = sample_loads(reference_spec, 0.1, seed=2)
        assert sample.total_demand == pytest.approx(float(np.sum(sample.values)))


class TestSynthesize:
    def test_shapes_and_determinism(self):
        one = synthesize_community(n_agents=4, n_gens=3, n_loads=2)
        two = synthesize_community(n_agents=4, n_gens=3, n_loads=2)
        assert one.n_agents == 4
        assert one.n_gens == 3
        assert one.n_loads == 2
        a1, b1, _, p1 = one.cost_arrays()
        a2, b2, _, p2 = two.cost_arrays()
        assert np.array_equal(a1, a2)
        assert np.array_equal(b1, b2)
        assert np.array_equal(p1, p2)

    def test_synthesized_community_is_valid(self):
        validate(synthesize_community(n_agents=5, n_gens=2, n_loads=3))

    def test_capacity_covers_demand(self):
        spec = synthesize_community(n_agents=3, n_gens=2, n_loads=4)
        assert spec.total_capacity >= spec.total_nominal_demand

    def test_reference_recipe_tolerates_fluctuation(self):
        # the bundled benchmark recipe: headroom must cover the configured
        # load band, or sampled scenarios could exceed capacity
        spec = synthesize_community(n_agents=33, n_gens=100, n_loads=100)
        assert spec.total_capacity >= 1.5 * spec.total_nominal_demand


class TestScenarioIO:
    def test_round_trip(self, tmp_path, reference_spec):
        path = tmp_path / "scenario.json"
        write_scenario(reference_spec, path, bench={"experiment": "demo", "seed": 5})
        loaded, config = load_scenario(path)
        assert loaded.n_agents == reference_spec.n_agents
        for got, want in zip(loaded.agents, reference_spec.agents):
            assert got.nominal_loads == want.nominal_loads
            for g_got, g_want in zip(got.generators, want.generators):
                assert (g_got.a, g_got.b, g_got.c, g_got.p_max) == (
                    g_want.a, g_want.b, g_want.c, g_want.p_max
                )
        assert config.experiment == "demo"
        assert config.seed == 5

    def test_missing_generator_field_named(self, tmp_path):
        payload = {
            "agents": [
                {"generators": [{"a": 1.0, "b": 0.0, "c": 0.0}], "loads": [1.0]}
            ]
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ScenarioParseError, match="p_max"):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioParseError):
            load_scenario(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_agents_and_synth_mutually_exclusive(self, tmp_path):
        payload = {
            "agents": [{"generators": [{"a": 1, "b": 0, "c": 0, "p_max": 2}], "loads": [1.0]}],
            "synth": {"n_agents": 2, "n_gens": 1, "n_loads": 1},
        }
        path = tmp_path / "both.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_builtin_scheme(self):
        spec, config = load_scenario("builtin:two_gen")
        assert spec.n_agents == 2
        assert isinstance(config, BenchConfig)

    def test_unknown_builtin(self):
        with pytest.raises(ScenarioParseError):
            load_scenario("builtin:nope")

    def test_synth_section_builds_community(self, tmp_path):
        payload = {
            "synth": {"n_agents": 3, "n_gens": 2, "n_loads": 2},
            "bench": {"experiment": "t", "seed": 1},
        }
        path = tmp_path / "synth.json"
        path.write_text(json.dumps(payload))
        spec, config = load_scenario(path)
        assert (spec.n_agents, spec.n_gens, spec.n_loads) == (3, 2, 2)
        assert config.seed == 1
