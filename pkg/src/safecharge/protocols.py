"""Non-RL baselines and policy evaluation.

``cccv_action`` realizes constant-current / constant-voltage charging with a
proportional controller holding the CV setpoint. ``evaluate`` rolls out any
deterministic policy (optionally behind the safety layer) and produces the
same episode logs and metrics as training, without agent updates.
"""

from __future__ import annotations

import math

from . import battery
from .config import BatteryParams, CccvParams, ExperimentConfig
from .gp import KernelParams
from .harness import reward
from .logs import EpisodeLog, EpisodeMetrics, StepRecord, compute_metrics
from .safety import DynamicSafety, StaticSafety, project
from .states import AgentState, BatteryState


def cccv_action(state: BatteryState, p: CccvParams, params: BatteryParams,
                a_min: float) -> float:
    """CC below the CV setpoint; proportional taper above it.

    The correction is cv_gain (A/V) scaled to C-rate by the capacity; output
    clamps to [a_min, cc_rate].
    """
    if state.voltage < p.cv_voltage:
        return p.cc_rate
    correction = p.cv_gain * (state.voltage - p.cv_voltage) / params.capacity_ah
    return min(max(p.cc_rate - correction, a_min), p.cc_rate)


def make_cccv_policy(config: ExperimentConfig):
    """Policy closure over the config's CCCV block."""
    def policy(state: BatteryState, agent_state: AgentState) -> float:
        return cccv_action(state, config.cccv, config.battery, config.a_min)
    return policy


def evaluate(config: ExperimentConfig, policy, safety: StaticSafety | None = None,
             adaptive: bool = False, episodes: int = 1,
             ) -> tuple[list[EpisodeMetrics], list[EpisodeLog]]:
    """Roll out ``episodes`` episodes of a deterministic policy.

    ``policy(battery_state, agent_state) -> C-rate``. With ``safety`` given,
    every action is projected; with ``adaptive`` also set, fresh residual GPs
    are maintained within each episode exactly as in adaptive training.
    Aging and the ambient schedule advance with the episode index (offset by
    ``config.start_episode``). Fully deterministic.
    """
    config.validate()
    params = config.battery
    kernel = KernelParams(signal_var=config.gp_signal_var,
                          length_scale=config.gp_length_scale,
                          noise_var=config.gp_noise_var)
    dyn = DynamicSafety.create(kernel, config.residual_min_points) \
        if (adaptive and safety is not None) else None

    throughput = config.initial_throughput_ah
    all_metrics: list[EpisodeMetrics] = []
    all_logs: list[EpisodeLog] = []

    for ep in range(1, episodes + 1):
        schedule_ep = config.start_episode + ep - 1
        ambient = config.ambient.ambient_at(schedule_ep)
        r0 = (battery.apply_aging(params, throughput)
              if config.ambient.aging_enabled else params.r0_initial)
        state = battery.reset(params, config.soc_start, ambient,
                              throughput_ah=throughput, r0=r0)
        if dyn is not None:
            dyn.reset_episode()

        prev_action = 0.0
        steps: list[StepRecord] = []
        reached = False

        for t in range(1, config.max_steps + 1):
            agent_state = AgentState(state.soc, state.voltage, state.temperature,
                                     prev_action)
            raw = float(policy(state, agent_state))
            raw = min(max(raw, config.a_min), config.a_max)

            executed = raw
            was_projected = False
            feasible = True
            uub_t = uub_v = math.nan
            if safety is not None:
                pr = project(raw, state.temperature, state.voltage, prev_action,
                             safety, dyn)
                executed = pr.action
                was_projected = pr.was_projected
                feasible = pr.feasible
                uub_t, uub_v = pr.predicted_temp_uub, pr.predicted_volt_uub

            nxt = battery.step(state, executed, config.dt, ambient, params)
            r = reward(nxt.voltage, nxt.temperature, config.voltage_limit,
                       config.temp_limit, config.lambda_voltage,
                       config.lambda_temperature)

            pred_ts = pred_ta = pred_vs = pred_va = math.nan
            if dyn is not None:
                x_t = [state.temperature, prev_action, executed]
                x_v = [state.voltage, prev_action, executed]
                pred_ts = safety.gp_temp.posterior_mean(x_t)
                pred_vs = safety.gp_volt.posterior_mean(x_v)
                pred_ta = pred_ts + dyn.temperature.mean(x_t)
                pred_va = pred_vs + dyn.voltage.mean(x_v)
                dyn.temperature.record(x_t, nxt.temperature, pred_ts)
                dyn.voltage.record(x_v, nxt.voltage, pred_vs)

            steps.append(StepRecord(
                t=t, soc=nxt.soc, voltage=nxt.voltage, temperature=nxt.temperature,
                ambient=ambient, raw_action=raw, executed_action=executed,
                was_projected=was_projected, feasible=feasible,
                uub_temperature=uub_t, uub_voltage=uub_v,
                pred_temp_static=pred_ts, pred_temp_adaptive=pred_ta,
                pred_volt_static=pred_vs, pred_volt_adaptive=pred_va,
                reward=r,
            ))
            state = nxt
            prev_action = executed
            if state.soc >= config.soc_target:
                reached = True
                break

        throughput = state.throughput_ah
        metrics = compute_metrics(steps, config.dt, config.temp_limit,
                                  config.voltage_limit, reached)
        all_metrics.append(metrics)
        all_logs.append(EpisodeLog(episode=ep, steps=steps, metrics=metrics))

    return all_metrics, all_logs
