"""Config schema round-trips, defaults, and normalization invertibility."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safecharge.config import (AmbientSchedule, BatteryParams, ConfigError,
                               ExperimentConfig, config_from_dict,
                               config_to_dict, fixed_condition_config,
                               load_config, save_config,
                               varying_condition_config)
from safecharge.states import AgentState, ObservationScaler


class TestDefaults:
    def test_fixed_study_defaults(self):
        cfg = fixed_condition_config()
        assert cfg.a_min == 0.05 and cfg.a_max == 4.5
        assert cfg.dt == 10.0
        assert cfg.temp_limit == 45.0 and cfg.voltage_limit == 4.3
        assert cfg.soc_start == 0.10 and cfg.soc_target == 0.80
        assert cfg.warmup_episodes == 5
        assert cfg.lambda_voltage == 15.0 and cfg.lambda_temperature == 20.0
        assert cfg.gamma == 0.99 and cfg.batch_size == 64 and cfg.tau == 0.006
        assert cfg.noise_variance == 0.3 and cfg.noise_decay == 0.025
        assert cfg.gp_length_scale == 1.0 and cfg.gp_noise_var == 1e-5
        assert cfg.actor_lr == 5e-4 and cfg.critic_lr == 5e-3

    def test_varying_study_defaults(self):
        cfg = varying_condition_config()
        assert cfg.temp_limit == 45.0 and cfg.voltage_limit == 4.4
        assert cfg.dt == 15.0
        assert cfg.ambient.base_temp == 10.0
        assert cfg.ambient.drift_increment == 0.145
        assert cfg.ambient.drift_cap == 36.0
        assert cfg.ambient.drift_start_episode == 100
        assert cfg.ambient.aging_enabled
        assert cfg.actor_lr == 5e-5 and cfg.critic_lr == 5e-4

    def test_empty_json_is_fixed_study(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("{}")
        assert load_config(str(path)) == ExperimentConfig()


class TestRoundTrip:
    def test_dict_round_trip_identity(self):
        cfg = varying_condition_config(seed=7, episodes=12)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_file_round_trip_identity(self, tmp_path):
        cfg = fixed_condition_config(seed=123, kappa=2.5)
        path = tmp_path / "cfg.json"
        save_config(cfg, str(path))
        assert load_config(str(path)) == cfg

    def test_json_is_plain_data(self, tmp_path):
        path = tmp_path / "cfg.json"
        save_config(ExperimentConfig(), str(path))
        doc = json.loads(path.read_text())
        assert doc["battery"]["capacity_ah"] == 5.0
        assert isinstance(doc["battery"]["ocv_knots"], list)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"not_a_field": 1})

    def test_partial_override(self):
        cfg = config_from_dict({"dt": 15.0, "battery": {"capacity_ah": 3.0}})
        assert cfg.dt == 15.0
        assert cfg.battery.capacity_ah == 3.0
        assert cfg.battery.r1 == 0.015  # untouched default


class TestValidation:
    def test_warmup_longer_than_run_rejected(self):
        with pytest.raises(ConfigError):
            fixed_condition_config(episodes=3, warmup_episodes=5).validate()

    def test_warmup_equal_to_run_allowed(self):
        fixed_condition_config(episodes=5, warmup_episodes=5).validate()

    def test_bad_action_bounds(self):
        with pytest.raises(ConfigError):
            fixed_condition_config(a_min=2.0, a_max=1.0).validate()

    def test_bad_soc_window(self):
        with pytest.raises(ConfigError):
            fixed_condition_config(soc_start=0.9, soc_target=0.8).validate()

    def test_nonmonotone_knots_rejected(self):
        bad = BatteryParams(ocv_knots=((0.0, 3.0), (0.5, 2.9), (1.0, 4.2)))
        with pytest.raises(ConfigError):
            bad.validate()


class TestAmbientSchedule:
    def test_flat_before_drift(self):
        sched = AmbientSchedule(base_temp=10.0, drift_start_episode=100,
                                drift_increment=0.145, drift_cap=36.0)
        assert sched.ambient_at(1) == 10.0
        assert sched.ambient_at(99) == 10.0
        assert sched.ambient_at(100) == 10.0

    def test_ramp_and_cap(self):
        sched = AmbientSchedule(base_temp=10.0, drift_start_episode=100,
                                drift_increment=0.145, drift_cap=36.0)
        assert sched.ambient_at(101) == pytest.approx(10.145)
        assert sched.ambient_at(200) == pytest.approx(10.0 + 100 * 0.145)
        assert sched.ambient_at(279) == pytest.approx(35.955)
        assert sched.ambient_at(280) == 36.0
        assert sched.ambient_at(10_000) == 36.0

    def test_constant_when_increment_zero(self):
        sched = AmbientSchedule()
        assert sched.ambient_at(1) == sched.ambient_at(500) == 25.0


class TestNormalization:
    @settings(max_examples=200, deadline=None)
    @given(soc=st.floats(0.0, 1.0),
           voltage=st.floats(2.5, 4.8),
           temperature=st.floats(0.0, 60.0),
           prev_action=st.floats(0.0, 4.5))
    def test_normalize_round_trip(self, soc, voltage, temperature, prev_action):
        scaler = ObservationScaler(ExperimentConfig())
        s = AgentState(soc, voltage, temperature, prev_action)
        back = scaler.denormalize(scaler.normalize(s))
        assert abs(back.soc - s.soc) < 1e-12
        assert abs(back.voltage - s.voltage) < 1e-12
        assert abs(back.temperature - s.temperature) < 1e-12
        assert abs(back.prev_action - s.prev_action) < 1e-12

    def test_normalized_range(self):
        scaler = ObservationScaler(ExperimentConfig())
        x = scaler.normalize(AgentState(0.5, 4.3, 45.0, 4.5))
        assert ((0.0 <= x) & (x <= 1.0)).all()

    def test_action_map_round_trip(self):
        scaler = ObservationScaler(ExperimentConfig())
        for a in (0.05, 1.0, 2.275, 4.5):
            assert scaler.denormalize_action(scaler.normalize_action(a)) == pytest.approx(a, abs=1e-14)
