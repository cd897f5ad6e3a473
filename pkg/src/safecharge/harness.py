"""Training orchestration: warmup, static GP fit, safe episodes, logging.

Three modes share one loop:

  plain          unconstrained TD3; the safety machinery is never touched.
  static-safe    warmup episodes take random actions and feed the constraint
                 GPs; after the warmup the static GPs are fitted once and
                 every subsequent action is projected through them.
  adaptive-safe  as static-safe, plus per-episode residual GPs composed into
                 the adaptive posterior; raw actions pass through while
                 t <= projection_start_step.

Per-step wall time is split into rl / gp / projection phases and logged.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import battery
from .config import ConfigError, ExperimentConfig
from .gp import KernelParams, fit, thin
from .logs import EpisodeLog, StepRecord, compute_metrics, write_episode_csv, write_summary_csv
from .rng import Rng
from .safety import DynamicSafety, StaticSafety, project
from .states import AgentState, Transition
from .td3 import ReplayBuffer, Td3Agent

MODES = ("plain", "static-safe", "adaptive-safe")


def reward(voltage: float, temperature: float, voltage_limit: float,
           temp_limit: float, lambda_voltage: float,
           lambda_temperature: float) -> float:
    """Per-step reward: -1 minus weighted voltage/temperature excursions.

    Evaluated at the post-step state, so the penalty lands on the action
    that caused the excursion.
    """
    return (-1.0
            - lambda_voltage * max(0.0, voltage - voltage_limit)
            - lambda_temperature * max(0.0, temperature - temp_limit))


@dataclass
class TrainResult:
    mode: str
    config: ExperimentConfig
    agent: Td3Agent
    safety: StaticSafety | None
    logs: list[EpisodeLog]


def _gp_kernel(config: ExperimentConfig) -> KernelParams:
    return KernelParams(signal_var=config.gp_signal_var,
                        length_scale=config.gp_length_scale,
                        noise_var=config.gp_noise_var)


def _fit_static_safety(config: ExperimentConfig, rng: Rng,
                       temp_x: list, temp_y: list,
                       volt_x: list, volt_y: list) -> StaticSafety:
    kernel = _gp_kernel(config)
    xt, yt = thin(np.array(temp_x), np.array(temp_y), config.gp_max_points, rng)
    xv, yv = thin(np.array(volt_x), np.array(volt_y), config.gp_max_points, rng)
    return StaticSafety(
        gp_temp=fit(xt, yt, kernel, optimize=True),
        gp_volt=fit(xv, yv, kernel, optimize=True),
        temp_limit=config.temp_limit,
        voltage_limit=config.voltage_limit,
        kappa=config.kappa,
        a_min=config.a_min,
        a_max=config.a_max,
    )


def train(config: ExperimentConfig, mode: str) -> TrainResult:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    config.validate()

    rng = Rng(config.seed)
    agent = Td3Agent.create(config, rng)
    buffer = ReplayBuffer(config.replay_capacity)
    adaptive = mode == "adaptive-safe"
    safe = mode != "plain"
    kernel = _gp_kernel(config)
    dyn = DynamicSafety.create(kernel, config.residual_min_points) if adaptive else None
    static_safety: StaticSafety | None = None

    temp_x: list[list[float]] = []
    temp_y: list[float] = []
    volt_x: list[list[float]] = []
    volt_y: list[float] = []

    params = config.battery
    throughput = config.initial_throughput_ah
    update_step = 0
    logs: list[EpisodeLog] = []

    for ep in range(1, config.episodes + 1):
        schedule_ep = config.start_episode + ep - 1
        ambient = config.ambient.ambient_at(schedule_ep)
        r0 = (battery.apply_aging(params, throughput)
              if config.ambient.aging_enabled else params.r0_initial)
        state = battery.reset(params, config.soc_start, ambient,
                              throughput_ah=throughput, r0=r0)
        agent.noise_std = agent.noise_std_for_episode(ep)
        warmup = ep <= config.warmup_episodes
        if adaptive and not warmup:
            dyn.reset_episode()

        prev_action = 0.0  # no charging current before the episode starts
        steps: list[StepRecord] = []
        reached = False

        for t in range(1, config.max_steps + 1):
            t0 = time.perf_counter_ns()
            agent_state = AgentState(state.soc, state.voltage, state.temperature,
                                     prev_action)
            if warmup:
                raw_action = rng.uniform_range(config.a_min, config.a_max)
            else:
                raw_action = agent.select_action(agent_state, rng, explore=True)
            rl_ns = time.perf_counter_ns() - t0

            executed = raw_action
            was_projected = False
            feasible = True
            uub_t = uub_v = math.nan
            projection_ns = 0
            if safe and not warmup and (not adaptive or t > config.projection_start_step):
                t0 = time.perf_counter_ns()
                pr = project(raw_action, state.temperature, state.voltage,
                             prev_action, static_safety, dyn)
                projection_ns = time.perf_counter_ns() - t0
                executed = pr.action
                was_projected = pr.was_projected
                feasible = pr.feasible
                uub_t, uub_v = pr.predicted_temp_uub, pr.predicted_volt_uub

            t0 = time.perf_counter_ns()
            nxt = battery.step(state, executed, config.dt, ambient, params)
            r = reward(nxt.voltage, nxt.temperature, config.voltage_limit,
                       config.temp_limit, config.lambda_voltage,
                       config.lambda_temperature)
            done = nxt.soc >= config.soc_target
            next_agent_state = AgentState(nxt.soc, nxt.voltage, nxt.temperature,
                                          executed)
            buffer.push(Transition(agent_state, executed, r, next_agent_state, done))
            rl_ns += time.perf_counter_ns() - t0

            gp_ns = 0
            pred_ts = pred_ta = pred_vs = pred_va = math.nan
            if safe and warmup:
                t0 = time.perf_counter_ns()
                temp_x.append([state.temperature, prev_action, executed])
                temp_y.append(nxt.temperature)
                volt_x.append([state.voltage, prev_action, executed])
                volt_y.append(nxt.voltage)
                gp_ns = time.perf_counter_ns() - t0
            elif adaptive and not warmup:
                # Residuals against the static means at the executed action;
                # the adaptive means logged here use the models available at
                # decision time (before this step's residual is recorded).
                t0 = time.perf_counter_ns()
                x_t = [state.temperature, prev_action, executed]
                x_v = [state.voltage, prev_action, executed]
                pred_ts = static_safety.gp_temp.posterior_mean(x_t)
                pred_vs = static_safety.gp_volt.posterior_mean(x_v)
                pred_ta = pred_ts + dyn.temperature.mean(x_t)
                pred_va = pred_vs + dyn.voltage.mean(x_v)
                dyn.temperature.record(x_t, nxt.temperature, pred_ts)
                dyn.voltage.record(x_v, nxt.voltage, pred_vs)
                gp_ns = time.perf_counter_ns() - t0

            t0 = time.perf_counter_ns()
            if len(buffer) >= config.batch_size:
                batch = buffer.sample(config.batch_size, rng)
                agent.update_critics(batch)
                update_step += 1
                agent.update_actor_and_targets(batch, update_step)
            rl_ns += time.perf_counter_ns() - t0

            steps.append(StepRecord(
                t=t, soc=nxt.soc, voltage=nxt.voltage, temperature=nxt.temperature,
                ambient=ambient, raw_action=raw_action, executed_action=executed,
                was_projected=was_projected, feasible=feasible,
                uub_temperature=uub_t, uub_voltage=uub_v,
                pred_temp_static=pred_ts, pred_temp_adaptive=pred_ta,
                pred_volt_static=pred_vs, pred_volt_adaptive=pred_va,
                reward=r, rl_us=rl_ns // 1000, gp_us=gp_ns // 1000,
                projection_us=projection_ns // 1000,
            ))
            state = nxt
            prev_action = executed
            if done:
                reached = True
                break

        throughput = state.throughput_ah
        logs.append(EpisodeLog(episode=ep, steps=steps,
                               metrics=compute_metrics(steps, config.dt,
                                                       config.temp_limit,
                                                       config.voltage_limit,
                                                       reached)))
        if safe and ep == config.warmup_episodes:
            static_safety = _fit_static_safety(config, rng, temp_x, temp_y,
                                               volt_x, volt_y)

    return TrainResult(mode=mode, config=config, agent=agent,
                       safety=static_safety, logs=logs)


def train_static(config: ExperimentConfig) -> TrainResult:
    """Warmup -> frozen static GPs -> projected TD3 episodes."""
    return train(config, "static-safe")


def train_adaptive(config: ExperimentConfig) -> TrainResult:
    """train_static plus per-episode residual GPs in the projection."""
    return train(config, "adaptive-safe")


def train_plain(config: ExperimentConfig) -> TrainResult:
    """Unconstrained TD3 baseline (no safety layer, same warmup schedule)."""
    return train(config, "plain")


# -- run outputs --------------------------------------------------------------

def save_checkpoint(path: str, agent: Td3Agent, safety: StaticSafety | None,
                    mode: str) -> None:
    doc = {"mode": mode, "agent": agent.to_dict(),
           "safety": safety.to_dict() if safety is not None else None}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str, config: ExperimentConfig
                    ) -> tuple[Td3Agent, StaticSafety | None, str]:
    with open(path) as fh:
        doc = json.load(fh)
    agent = Td3Agent.from_dict(config, doc["agent"])
    safety = StaticSafety.from_dict(doc["safety"]) if doc["safety"] else None
    return agent, safety, doc["mode"]


def write_run_outputs(out_dir: str, logs: list[EpisodeLog],
                      agent: Td3Agent | None = None,
                      safety: StaticSafety | None = None,
                      mode: str = "") -> None:
    os.makedirs(out_dir, exist_ok=True)
    for log in logs:
        write_episode_csv(log, os.path.join(out_dir, f"episode_{log.episode:04d}.csv"))
    write_summary_csv(logs, os.path.join(out_dir, "summary.csv"))
    if agent is not None:
        save_checkpoint(os.path.join(out_dir, "checkpoint.json"), agent, safety, mode)


def summarize(logs: list[EpisodeLog]) -> str:
    """One-line run summary for the CLI."""
    finished = [log.metrics.steps_to_target for log in logs if log.metrics.finished]
    mean_steps = float(np.mean(finished)) if finished else math.nan
    viol = sum(log.metrics.violation_steps_temp + log.metrics.violation_steps_volt
               for log in logs)
    last = logs[-1].metrics
    return (f"episodes={len(logs)} finished={len(finished)} "
            f"mean_steps={mean_steps:.1f} total_violation_steps={viol} "
            f"last_reward={last.cumulative_reward:.2f}")
