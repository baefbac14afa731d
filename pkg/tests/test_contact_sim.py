import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfwarp.contact_sim import ContactEnv, ScenarioEvent, env_from_scenario, load_scenario, parse_scenario
from surfwarp.errors import ConfigError
from surfwarp.geometry import Surface, surface_height

S = Surface("sin", 0.05, 6.0)


def tip_at_depth(x, depth):
    return np.array([x, 0.0, surface_height(S, x) - depth])


class TestMeasure:
    def test_above_surface(self):
        assert ContactEnv(S).measure(tip_at_depth(0.3, -0.01)) == 0.0

    def test_spring_law(self):
        assert ContactEnv(S, stiffness=100).measure(tip_at_depth(0.3, 0.005)) == pytest.approx(0.5, abs=1e-12)

    def test_clamped(self):
        assert ContactEnv(S, stiffness=100).measure(tip_at_depth(0.3, 0.05)) == 1.0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 0.02), st.floats(0, 0.02))
    def test_monotone_in_depth(self, d1, d2):
        env = ContactEnv(S, stiffness=40)
        lo, hi = sorted([d1, d2])
        assert env.measure(tip_at_depth(0.1, lo)) <= env.measure(tip_at_depth(0.1, hi))

    def test_noise_reproducible(self):
        def run():
            env = ContactEnv(S, stiffness=50, noise_sigma=0.05, rng_seed=9)
            out = []
            for _ in range(20):
                out.append(env.measure(tip_at_depth(0.2, 0.01)))
                env.advance()
            return out

        a, b = run(), run()
        assert a == b and len(set(a)) > 1


class TestEvents:
    def test_no_events(self):
        env = ContactEnv(S)
        env.advance()
        assert env.surface == S

    def test_drop_from_step_on(self):
        env = ContactEnv(S, events=[ScenarioEvent("height_drop", 50, 0.01)])
        ref = ContactEnv(S)
        for k in range(60):
            if k < 50:
                assert env.surface == ref.surface and env.bias == ref.bias
            else:
                assert surface_height(env.surface, 0.37) == pytest.approx(surface_height(S, 0.37) - 0.01, abs=1e-15)
            env.advance()
            ref.advance()

    def test_stacked_drops(self):
        env = ContactEnv(S, events=[ScenarioEvent("height_drop", 1, 0.01), ScenarioEvent("height_drop", 2, 0.02)])
        env.advance()
        env.advance()
        assert env.surface.height_offset == pytest.approx(-0.03, abs=1e-15)

    def test_bias(self):
        env = ContactEnv(S, stiffness=100, events=[ScenarioEvent("force_bias", 0, 0.3)])
        assert env.measure(tip_at_depth(0.1, 0.001)) == pytest.approx(0.4, abs=1e-12)

    def test_bad_event(self):
        with pytest.raises(ConfigError):
            ScenarioEvent("earthquake", 1, 0.1)
        with pytest.raises(ConfigError):
            ScenarioEvent("height_drop", -1, 0.1)


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        data = {"stiffness": 30, "noise_sigma": 0.01, "seed": 4,
                "events": [{"kind": "height_drop", "at_step": 3, "magnitude": 0.01}]}
        path = tmp_path / "s.json"
        path.write_text(json.dumps(data))
        sc = load_scenario(path)
        env = env_from_scenario(S, sc)
        assert env.stiffness == 30 and env.rng_seed == 4 and env.events[0].at_step == 3

    def test_malformed(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_scenario({"events": [{"kind": "height_drop"}]})
        with pytest.raises(ConfigError):
            parse_scenario({"stiffness": -1})
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(bad)

    def test_invalid_env(self):
        with pytest.raises(ConfigError):
            ContactEnv(S, stiffness=0)
