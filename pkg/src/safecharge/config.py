"""Experiment configuration: dataclass schema, defaults, JSON round-trip.

Unit conventions (enforced by tests, not by a unit library):
  currents are C-rates, voltages volts, temperatures degrees Celsius,
  times seconds, charge ampere-hours. The agent/safety stack works in
  C-rate; only the battery model converts to amperes via the capacity.

An empty JSON object loads to the fixed-condition study defaults; every
field can be overridden individually. ``varying_condition_config`` returns
the drifting-ambient / aging study preset.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

DEFAULT_OCV_KNOTS: tuple[tuple[float, float], ...] = (
    (0.0, 3.00),
    (0.1, 3.35),
    (0.2, 3.45),
    (0.4, 3.50),
    (0.6, 3.70),
    (0.8, 3.95),
    (0.9, 4.05),
    (1.0, 4.20),
)


class ConfigError(ValueError):
    """Raised when a configuration fails validation."""


@dataclass(frozen=True)
class BatteryParams:
    """First-order Thevenin cell + lumped thermal node + sqrt-throughput aging."""

    capacity_ah: float = 5.0
    r0_initial: float = 0.01  # ohms, series resistance of the fresh cell
    r1: float = 0.015  # ohms, RC-branch resistance
    c1: float = 250.0  # farads; tau = r1*c1 << dt so the branch settles each step
    ocv_knots: tuple[tuple[float, float], ...] = DEFAULT_OCV_KNOTS
    thermal_mass: float = 100.0  # J/degC
    heat_transfer: float = 0.195  # W/degC
    aging_alpha: float = 0.08  # ohm growth per sqrt(Ah) relative to r0_initial
    coulombic_eff: float = 0.995

    def validate(self) -> None:
        for name in ("capacity_ah", "r0_initial", "r1", "c1", "thermal_mass",
                     "heat_transfer", "coulombic_eff"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"battery.{name} must be positive")
        if self.aging_alpha < 0.0:
            raise ConfigError("battery.aging_alpha must be non-negative")
        knots = self.ocv_knots
        if len(knots) < 2 or knots[0][0] != 0.0 or knots[-1][0] != 1.0:
            raise ConfigError("ocv_knots must span soc 0 to 1")
        for (s0, v0), (s1, v1) in zip(knots, knots[1:]):
            if not (s1 > s0 and v1 > v0):
                raise ConfigError("ocv_knots must be strictly increasing in soc and volts")


@dataclass(frozen=True)
class AmbientSchedule:
    """Per-episode ambient temperature and the aging switch."""

    base_temp: float = 25.0
    drift_start_episode: int = 1
    drift_increment: float = 0.0  # degC per episode once drift starts
    drift_cap: float = 25.0
    aging_enabled: bool = False

    def ambient_at(self, episode: int) -> float:
        """Ambient for a 1-based episode index."""
        if episode < self.drift_start_episode or self.drift_increment <= 0.0:
            return self.base_temp
        ramp = self.base_temp + (episode - self.drift_start_episode) * self.drift_increment
        return min(ramp, self.drift_cap)


@dataclass(frozen=True)
class CccvParams:
    """Constant-current constant-voltage baseline setpoints."""

    cc_rate: float = 2.0  # C-rate of the CC phase
    cv_voltage: float = 4.25  # volts held during the CV phase
    cv_gain: float = 30.0  # amperes per volt of proportional feedback
    termination_current: float = 0.05  # C-rate floor of the CV taper


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a training or evaluation run needs. Defaults = fixed-condition study."""

    # TD3
    actor_lr: float = 5e-4
    critic_lr: float = 5e-3
    batch_size: int = 64
    gamma: float = 0.99
    tau: float = 0.006  # target-network mixing weight
    policy_delay: int = 2
    noise_variance: float = 0.3  # initial exploration-noise variance (C-rate^2)
    noise_decay: float = 0.025  # linear std decay per episode
    noise_floor: float = 0.01
    replay_capacity: int = 100_000

    # GP kernel / safety layer
    gp_length_scale: float = 1.0
    gp_noise_var: float = 1e-5
    gp_signal_var: float = 1.0
    gp_max_points: int = 512  # static GP training-set cap
    residual_min_points: int = 3  # dynamic GP activation threshold
    kappa: float = 3.0  # confidence multiplier on the posterior std
    projection_start_step: int = 0  # raw actions while t <= this (adaptive mode)

    # Charging problem
    a_min: float = 0.05  # C-rate
    a_max: float = 4.5
    dt: float = 10.0  # seconds
    temp_limit: float = 45.0  # degC
    voltage_limit: float = 4.3  # volts
    soc_start: float = 0.10
    soc_target: float = 0.80
    lambda_voltage: float = 15.0
    lambda_temperature: float = 20.0

    # Run shape
    episodes: int = 150
    warmup_episodes: int = 5  # random-action episodes that feed the static GPs
    max_steps: int = 300
    seed: int = 42
    start_episode: int = 1  # offset into the ambient/aging schedule
    initial_throughput_ah: float = 0.0  # pre-aged cell support for endpoint evals

    # Observation normalization ranges (fixed, so the net input map never drifts)
    obs_temp_range: tuple[float, float] = (0.0, 60.0)
    obs_voltage_range: tuple[float, float] = (2.5, 4.8)

    battery: BatteryParams = field(default_factory=BatteryParams)
    ambient: AmbientSchedule = field(default_factory=AmbientSchedule)
    cccv: CccvParams = field(default_factory=CccvParams)

    def validate(self) -> None:
        if not (0.0 < self.a_min < self.a_max):
            raise ConfigError("need 0 < a_min < a_max")
        if not (0.0 <= self.soc_start < self.soc_target <= 1.0):
            raise ConfigError("need 0 <= soc_start < soc_target <= 1")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.warmup_episodes > self.episodes:
            raise ConfigError("warmup_episodes may not exceed episodes")
        if self.warmup_episodes < 1:
            raise ConfigError("need at least one warmup episode to fit the static GPs")
        if self.max_steps < 1 or self.episodes < 1:
            raise ConfigError("episodes and max_steps must be >= 1")
        if self.batch_size > self.replay_capacity:
            raise ConfigError("batch_size may not exceed replay_capacity")
        if self.kappa <= 0.0:
            raise ConfigError("kappa must be positive")
        if self.gp_max_points < 2:
            raise ConfigError("gp_max_points must be >= 2")
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigError("gamma must be in [0, 1]")
        lo, hi = self.obs_temp_range
        if lo >= hi:
            raise ConfigError("obs_temp_range must be increasing")
        lo, hi = self.obs_voltage_range
        if lo >= hi:
            raise ConfigError("obs_voltage_range must be increasing")
        self.battery.validate()


def fixed_condition_config(**overrides: Any) -> ExperimentConfig:
    """The constant-25-degC study configuration."""
    return dataclasses.replace(ExperimentConfig(), **overrides)


def varying_condition_config(**overrides: Any) -> ExperimentConfig:
    """Drifting ambient (10 -> 36 degC from episode 100) with aging enabled."""
    base = ExperimentConfig(
        actor_lr=5e-5,
        critic_lr=5e-4,
        dt=15.0,
        voltage_limit=4.4,
        episodes=300,
        max_steps=240,
        ambient=AmbientSchedule(
            base_temp=10.0,
            drift_start_episode=100,
            drift_increment=0.145,
            drift_cap=36.0,
            aging_enabled=True,
        ),
        cccv=CccvParams(cc_rate=0.6, cv_voltage=4.05, cv_gain=30.0,
                        termination_current=0.05),
    )
    return dataclasses.replace(base, **overrides)


# --- JSON (de)serialization ------------------------------------------------

def _to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_jsonable(v) for v in obj]
    return obj


def config_to_dict(config: ExperimentConfig) -> dict:
    return _to_jsonable(config)


def _knots_from_list(raw: Any) -> tuple[tuple[float, float], ...]:
    return tuple((float(s), float(v)) for s, v in raw)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from a (possibly partial) plain dict; unknown keys rejected."""
    data = dict(data)
    kwargs: dict[str, Any] = {}
    if "battery" in data:
        braw = dict(data.pop("battery"))
        if "ocv_knots" in braw:
            braw["ocv_knots"] = _knots_from_list(braw["ocv_knots"])
        kwargs["battery"] = BatteryParams(**braw)
    if "ambient" in data:
        kwargs["ambient"] = AmbientSchedule(**data.pop("ambient"))
    if "cccv" in data:
        kwargs["cccv"] = CccvParams(**data.pop("cccv"))
    for tup_key in ("obs_temp_range", "obs_voltage_range"):
        if tup_key in data:
            data[tup_key] = tuple(float(v) for v in data.pop(tup_key))
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs.update(data)
    return ExperimentConfig(**kwargs)


def save_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        cfg = config_from_dict(json.load(fh))
    cfg.validate()
    return cfg
