"""Battery simulator: Thevenin equivalent circuit, lumped thermal node, aging.

Charging only. The electrical RC branch uses its exact exponential update at
the fixed sampling time; the thermal node uses forward Euler (thermal time
constant >> dt). Aging raises the series resistance with the square root of
cumulative charge throughput and is applied between episodes only.
"""

from __future__ import annotations

import math

from .config import BatteryParams
from .states import BatteryState


def ocv(soc: float, params: BatteryParams) -> float:
    """Open-circuit voltage by piecewise-linear interpolation through the knots.

    Out-of-range soc is clamped, not rejected.
    """
    s = min(max(soc, 0.0), 1.0)
    knots = params.ocv_knots
    for (s0, v0), (s1, v1) in zip(knots, knots[1:]):
        if s <= s1:
            return v0 + (v1 - v0) * (s - s0) / (s1 - s0)
    return knots[-1][1]


def soc_from_ocv(v: float, params: BatteryParams) -> float:
    """Inverse of :func:`ocv` (clamped at the curve's ends)."""
    knots = params.ocv_knots
    if v <= knots[0][1]:
        return knots[0][0]
    for (s0, v0), (s1, v1) in zip(knots, knots[1:]):
        if v <= v1:
            return s0 + (s1 - s0) * (v - v0) / (v1 - v0)
    return knots[-1][0]


def apply_aging(params: BatteryParams, throughput_ah: float) -> float:
    """Aged series resistance: r0_initial * (1 + alpha * sqrt(throughput))."""
    if throughput_ah < 0.0:
        raise ValueError("throughput_ah must be non-negative")
    return params.r0_initial * (1.0 + params.aging_alpha * math.sqrt(throughput_ah))


def reset(params: BatteryParams, soc_start: float, ambient: float,
          throughput_ah: float = 0.0, r0: float | None = None) -> BatteryState:
    """Episode-start state. Throughput and r0 persist across episodes (aging
    is cumulative); pass the carried values, or leave r0 None for a fresh cell."""
    if not 0.0 <= soc_start <= 1.0:
        raise ValueError("soc_start must lie in [0, 1]")
    return BatteryState(
        soc=soc_start,
        voltage=ocv(soc_start, params),
        temperature=ambient,
        rc_voltage=0.0,
        throughput_ah=throughput_ah,
        r0=params.r0_initial if r0 is None else r0,
    )


def step(state: BatteryState, current: float, dt: float, ambient: float,
         params: BatteryParams) -> BatteryState:
    """One charging step. ``current`` is a C-rate >= 0; dt in seconds."""
    if not (math.isfinite(current) and math.isfinite(dt) and math.isfinite(ambient)):
        raise ValueError("non-finite input to battery step")
    if current < 0.0:
        raise ValueError("discharge currents are out of scope")
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    amps = current * params.capacity_ah
    soc = state.soc + params.coulombic_eff * amps * dt / (3600.0 * params.capacity_ah)
    soc = min(max(soc, 0.0), 1.0)

    decay = math.exp(-dt / (params.r1 * params.c1))
    rc = state.rc_voltage * decay + params.r1 * (1.0 - decay) * amps

    voltage = ocv(soc, params) + state.r0 * amps + rc

    heat = amps * amps * state.r0 + rc * rc / params.r1
    cooling = params.heat_transfer * (state.temperature - ambient)
    temperature = state.temperature + (dt / params.thermal_mass) * (heat - cooling)

    new = BatteryState(
        soc=soc,
        voltage=voltage,
        temperature=temperature,
        rc_voltage=rc,
        throughput_ah=state.throughput_ah + amps * dt / 3600.0,
        r0=state.r0,
    )
    if not all(math.isfinite(v) for v in
               (new.soc, new.voltage, new.temperature, new.rc_voltage)):
        raise ValueError("battery step produced a non-finite state")
    return new
