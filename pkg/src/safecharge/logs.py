"""Per-step episode logs, episode metrics, and their CSV serialization.

Each step row records the *resulting* battery state (the state observed
after the action executed), the action pair (raw and executed), safety-layer
diagnostics, the reward, and per-phase wall-clock timings. Violation
counters and max columns are computed from the true simulated values.

Float formatting uses ``repr`` (shortest round-trip), so identical runs
produce byte-identical CSVs. ``summary.csv`` carries no timing columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

STEP_COLUMNS = [
    "t", "soc", "voltage", "temperature", "ambient",
    "raw_action", "executed_action", "was_projected", "feasible",
    "uub_temperature", "uub_voltage",
    "pred_temp_static", "pred_temp_adaptive",
    "pred_volt_static", "pred_volt_adaptive",
    "reward", "rl_us", "gp_us", "projection_us",
]

SUMMARY_COLUMNS = ["episode", "reward", "steps", "max_temperature",
                   "max_voltage", "violations_temperature", "violations_voltage"]


@dataclass
class StepRecord:
    t: int
    soc: float
    voltage: float
    temperature: float
    ambient: float
    raw_action: float
    executed_action: float
    was_projected: bool
    feasible: bool
    uub_temperature: float = math.nan  # nan when the safety layer did not run
    uub_voltage: float = math.nan
    pred_temp_static: float = math.nan
    pred_temp_adaptive: float = math.nan
    pred_volt_static: float = math.nan
    pred_volt_adaptive: float = math.nan
    reward: float = 0.0
    rl_us: int = 0
    gp_us: int = 0
    projection_us: int = 0


@dataclass
class EpisodeMetrics:
    steps_to_target: int | None  # None = did not finish within max_steps
    charge_minutes: float
    max_temperature: float
    max_voltage: float
    violation_steps_temp: int
    violation_steps_volt: int
    cumulative_reward: float

    @property
    def finished(self) -> bool:
        return self.steps_to_target is not None


@dataclass
class EpisodeLog:
    episode: int
    steps: list[StepRecord]
    metrics: EpisodeMetrics


def compute_metrics(steps: list[StepRecord], dt: float, temp_limit: float,
                    voltage_limit: float, reached_target: bool) -> EpisodeMetrics:
    """Aggregate a finished episode's rows; DNF episodes report the full
    max-steps duration and a None step count."""
    if not steps:
        raise ValueError("episode has no steps")
    return EpisodeMetrics(
        steps_to_target=len(steps) if reached_target else None,
        charge_minutes=len(steps) * dt / 60.0,
        max_temperature=max(s.temperature for s in steps),
        max_voltage=max(s.voltage for s in steps),
        violation_steps_temp=sum(1 for s in steps if s.temperature > temp_limit),
        violation_steps_volt=sum(1 for s in steps if s.voltage > voltage_limit),
        cumulative_reward=sum(s.reward for s in steps),
    )


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_episode_csv(log: EpisodeLog, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(STEP_COLUMNS) + "\n")
        for s in log.steps:
            fh.write(",".join(_fmt(getattr(s, col)) for col in STEP_COLUMNS) + "\n")
        m = log.metrics
        fh.write(f"# steps_to_target={_fmt(m.steps_to_target)}\n")
        fh.write(f"# charge_minutes={_fmt(m.charge_minutes)}\n")
        fh.write(f"# max_temperature={_fmt(m.max_temperature)}\n")
        fh.write(f"# max_voltage={_fmt(m.max_voltage)}\n")
        fh.write(f"# violation_steps_temp={m.violation_steps_temp}\n")
        fh.write(f"# violation_steps_volt={m.violation_steps_volt}\n")
        fh.write(f"# cumulative_reward={_fmt(m.cumulative_reward)}\n")


def write_summary_csv(logs: list[EpisodeLog], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for log in logs:
            m = log.metrics
            row = [log.episode, m.cumulative_reward, len(log.steps),
                   m.max_temperature, m.max_voltage,
                   m.violation_steps_temp, m.violation_steps_volt]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
