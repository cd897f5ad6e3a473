"""Shared value types: battery state, agent observation, replay transition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig


@dataclass(frozen=True)
class BatteryState:
    """Full simulator state. ``r0`` carries the aged series resistance."""

    soc: float  # fraction in [0, 1]
    voltage: float  # volts, terminal
    temperature: float  # degC, cell
    rc_voltage: float  # volts across the RC branch
    throughput_ah: float  # cumulative charge throughput, drives aging
    r0: float  # ohms after aging


@dataclass(frozen=True)
class AgentState:
    """The 4-vector the actor sees: SOC, voltage, temperature, previous action."""

    soc: float
    voltage: float
    temperature: float
    prev_action: float  # C-rate actually executed at the previous step


@dataclass(frozen=True)
class Transition:
    state: AgentState
    action: float  # C-rate actually executed (post-projection when safety is on)
    reward: float
    next_state: AgentState
    done: bool


class ObservationScaler:
    """Affine map between physical AgentState fields and the [0, 1] network inputs.

    Ranges are fixed by the config so the mapping never drifts during a run.
    """

    def __init__(self, config: ExperimentConfig):
        t_lo, t_hi = config.obs_temp_range
        v_lo, v_hi = config.obs_voltage_range
        # soc, voltage, temperature, prev_action (prev action can be 0 at reset)
        self._lo = np.array([0.0, v_lo, t_lo, 0.0], dtype=np.float64)
        self._hi = np.array([1.0, v_hi, t_hi, config.a_max], dtype=np.float64)
        self._span = self._hi - self._lo
        self.a_min = config.a_min
        self.a_max = config.a_max

    def normalize(self, s: AgentState) -> np.ndarray:
        raw = np.array([s.soc, s.voltage, s.temperature, s.prev_action])
        return (raw - self._lo) / self._span

    def normalize_batch(self, states: list[AgentState]) -> np.ndarray:
        raw = np.array([[s.soc, s.voltage, s.temperature, s.prev_action] for s in states])
        return (raw - self._lo) / self._span

    def denormalize(self, x: np.ndarray) -> AgentState:
        raw = np.asarray(x, dtype=np.float64) * self._span + self._lo
        return AgentState(soc=float(raw[0]), voltage=float(raw[1]),
                          temperature=float(raw[2]), prev_action=float(raw[3]))

    def normalize_action(self, a) -> np.ndarray | float:
        """C-rate in [a_min, a_max] -> [0, 1]; works on scalars and arrays."""
        return (a - self.a_min) / (self.a_max - self.a_min)

    def denormalize_action(self, u) -> np.ndarray | float:
        return self.a_min + u * (self.a_max - self.a_min)
