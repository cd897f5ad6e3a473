"""GP safety layer: constraint surrogates, adaptive composition, projection.

The static pair of GPs predicts next-step temperature and voltage from
[current value, previous executed action, candidate action]. Per-episode
residual GPs correct the static means online; the adaptive posterior sums
the means and keeps the static variance (within-episode residual data is too
sparse for a trustworthy variance). Projection solves the scalar constrained
closest-point problem with a grid scan plus bisection refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gp import GpModel, KernelParams, fit


class SafetyNotReadyError(RuntimeError):
    """Projection requested before the static GPs were fitted."""


@dataclass(frozen=True)
class ProjectionResult:
    action: float  # C-rate, always within [a_min, a_max]
    was_projected: bool
    feasible: bool
    predicted_temp_uub: float  # UUB at the returned action
    predicted_volt_uub: float


@dataclass(frozen=True)
class StaticSafety:
    """Frozen constraint surrogates plus the operating limits."""

    gp_temp: GpModel
    gp_volt: GpModel
    temp_limit: float
    voltage_limit: float
    kappa: float
    a_min: float
    a_max: float

    def to_dict(self) -> dict:
        return {"gp_temp": self.gp_temp.to_dict(), "gp_volt": self.gp_volt.to_dict(),
                "temp_limit": self.temp_limit, "voltage_limit": self.voltage_limit,
                "kappa": self.kappa, "a_min": self.a_min, "a_max": self.a_max}

    @classmethod
    def from_dict(cls, data: dict) -> "StaticSafety":
        return cls(gp_temp=GpModel.from_dict(data["gp_temp"]),
                   gp_volt=GpModel.from_dict(data["gp_volt"]),
                   temp_limit=data["temp_limit"], voltage_limit=data["voltage_limit"],
                   kappa=data["kappa"], a_min=data["a_min"], a_max=data["a_max"])


def uub(gp: GpModel, x, kappa: float):
    """Upper uncertainty bound: posterior mean + kappa * posterior std."""
    mean, var = gp.posterior(x)
    return mean + kappa * np.sqrt(var)


def adaptive_posterior(stat: GpModel, dyn: GpModel | None, x):
    """Sum of static and dynamic means; variance taken from the static GP only."""
    mean_s, var_s = stat.posterior(x)
    if dyn is None:
        return mean_s, var_s
    return mean_s + dyn.posterior_mean(x), var_s


class ResidualGp:
    """Within-episode residual model for one constrained variable.

    Inactive (mean 0, variance 0 for composition) until ``min_points``
    residuals have been recorded; refits from scratch on every record after
    that, with fixed hyperparameters.
    """

    def __init__(self, kernel: KernelParams, min_points: int = 3):
        self.kernel = kernel
        self.min_points = min_points
        self._xs: list[np.ndarray] = []
        self._ys: list[float] = []
        self.model: GpModel | None = None

    @property
    def active(self) -> bool:
        return self.model is not None

    @property
    def size(self) -> int:
        return len(self._xs)

    def record(self, x, z_true: float, static_mean: float) -> None:
        """Store (x, z_true - static_mean); refit once past the threshold."""
        self._xs.append(np.asarray(x, dtype=np.float64))
        self._ys.append(float(z_true) - float(static_mean))
        if len(self._xs) >= self.min_points:
            self.model = fit(np.vstack(self._xs), np.array(self._ys),
                             self.kernel, optimize=False)

    def reset(self) -> None:
        self._xs.clear()
        self._ys.clear()
        self.model = None

    def mean(self, x):
        """Residual posterior mean; 0 while inactive."""
        if self.model is None:
            x = np.asarray(x, dtype=np.float64)
            return 0.0 if x.ndim == 1 else np.zeros(x.shape[0])
        return self.model.posterior_mean(x)


@dataclass
class DynamicSafety:
    """The pair of per-episode residual GPs (temperature, voltage)."""

    temperature: ResidualGp
    voltage: ResidualGp

    @classmethod
    def create(cls, kernel: KernelParams, min_points: int = 3) -> "DynamicSafety":
        return cls(temperature=ResidualGp(kernel, min_points),
                   voltage=ResidualGp(kernel, min_points))

    def reset_episode(self) -> None:
        self.temperature.reset()
        self.voltage.reset()


def _constraint_uubs(actions: np.ndarray, z_temp: float, z_volt: float,
                     a_prev: float, stat: StaticSafety,
                     dyn: DynamicSafety | None) -> tuple[np.ndarray, np.ndarray]:
    """UUBs of both constraints at each candidate action."""
    m = actions.shape[0]
    x_t = np.column_stack([np.full(m, z_temp), np.full(m, a_prev), actions])
    x_v = np.column_stack([np.full(m, z_volt), np.full(m, a_prev), actions])
    dyn_t = dyn.temperature.model if dyn is not None else None
    dyn_v = dyn.voltage.model if dyn is not None else None
    mean_t, var_t = adaptive_posterior(stat.gp_temp, dyn_t, x_t)
    mean_v, var_v = adaptive_posterior(stat.gp_volt, dyn_v, x_v)
    uub_t = mean_t + stat.kappa * np.sqrt(var_t)
    uub_v = mean_v + stat.kappa * np.sqrt(var_v)
    return np.atleast_1d(uub_t), np.atleast_1d(uub_v)


def project(a_raw: float, z_temp: float, z_volt: float, a_prev: float,
            stat: StaticSafety, dyn: DynamicSafety | None = None,
            grid_size: int = 256, refine_tol: float = 1e-4) -> ProjectionResult:
    """Closest action to ``a_raw`` whose constraint UUBs stay under the limits.

    Grid scan over [a_min, a_max] followed by bisection between the winning
    grid point and its infeasible neighbor toward ``a_raw``. Returns ``a_raw``
    untouched when it is already feasible; falls back to ``a_min`` (flagged
    infeasible) when no grid point satisfies the constraints.
    """
    if stat is None or stat.gp_temp is None or stat.gp_volt is None:
        raise SafetyNotReadyError("safety layer not ready")
    if not stat.a_min <= a_raw <= stat.a_max:
        raise ValueError("a_raw outside the action bounds")

    def evaluate(actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ut, uv = _constraint_uubs(actions, z_temp, z_volt, a_prev, stat, dyn)
        return ut, uv, (ut <= stat.temp_limit) & (uv <= stat.voltage_limit)

    ut, uv, ok = evaluate(np.array([a_raw]))
    if ok[0]:
        return ProjectionResult(action=a_raw, was_projected=False, feasible=True,
                                predicted_temp_uub=float(ut[0]),
                                predicted_volt_uub=float(uv[0]))

    grid = np.linspace(stat.a_min, stat.a_max, grid_size)
    g_ut, g_uv, g_ok = evaluate(grid)
    if not np.any(g_ok):
        ut, uv, _ = evaluate(np.array([stat.a_min]))
        return ProjectionResult(action=stat.a_min, was_projected=True, feasible=False,
                                predicted_temp_uub=float(ut[0]),
                                predicted_volt_uub=float(uv[0]))

    feas_idx = np.flatnonzero(g_ok)
    best = feas_idx[np.argmin(np.abs(grid[feas_idx] - a_raw))]
    feas_pt = float(grid[best])

    # Nearest known-infeasible point toward a_raw; a_raw itself is infeasible,
    # so it bounds the bisection when the adjacent grid point lies past it.
    if feas_pt < a_raw:
        if best + 1 < grid_size and grid[best + 1] < a_raw and not g_ok[best + 1]:
            infeas_pt = float(grid[best + 1])
        else:
            infeas_pt = a_raw
    else:
        if best - 1 >= 0 and grid[best - 1] > a_raw and not g_ok[best - 1]:
            infeas_pt = float(grid[best - 1])
        else:
            infeas_pt = a_raw

    while abs(infeas_pt - feas_pt) > refine_tol:
        mid = 0.5 * (feas_pt + infeas_pt)
        _, _, ok = evaluate(np.array([mid]))
        if ok[0]:
            feas_pt = mid
        else:
            infeas_pt = mid

    ut, uv, _ = evaluate(np.array([feas_pt]))
    return ProjectionResult(action=feas_pt, was_projected=True, feasible=True,
                            predicted_temp_uub=float(ut[0]),
                            predicted_volt_uub=float(uv[0]))


def record_residual(dyn_channel: ResidualGp, x, z_true: float,
                    static_mean: float) -> ResidualGp:
    """Functional-style wrapper over :meth:`ResidualGp.record`."""
    dyn_channel.record(x, z_true, static_mean)
    return dyn_channel


def reset_episode(dyn: DynamicSafety) -> DynamicSafety:
    """Empty the residual buffers and deactivate the dynamic GPs."""
    dyn.reset_episode()
    return dyn
