"""Exact Gaussian-process regression with an RBF + white-noise kernel.

Inputs are standardized per dimension and targets standardized before
fitting; hyperparameters therefore live in standardized units. Posterior
mean/variance go through the Cholesky factor; the inverse factor is cached
once per fit so batched queries run as GEMMs. Hyperparameter fitting
maximizes the log marginal likelihood over (log signal_var, log length_scale)
with analytic gradients and a fixed white-noise level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize

_LOG_2PI = float(np.log(2.0 * np.pi))


class GpFitError(RuntimeError):
    """Kernel matrix could not be factorized even with jitter escalation."""


@dataclass(frozen=True)
class KernelParams:
    signal_var: float = 1.0
    length_scale: float = 1.0
    noise_var: float = 1e-5

    def validate(self) -> None:
        if min(self.signal_var, self.length_scale, self.noise_var) <= 0.0:
            raise ValueError("kernel parameters must be strictly positive")


def kernel_eval(x, x2, k: KernelParams) -> float:
    """RBF covariance between two points.

    The white-noise term applies only on the training diagonal and is added
    during matrix construction, not here.
    """
    d2 = float(np.sum((np.asarray(x, dtype=np.float64) - np.asarray(x2, dtype=np.float64)) ** 2))
    return k.signal_var * float(np.exp(-d2 / (2.0 * k.length_scale ** 2)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (len(a), len(b))."""
    d2 = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    return np.maximum(d2, 0.0)


def _factorize(x_std: np.ndarray, y_std: np.ndarray, kernel: KernelParams):
    """Build K + noise and Cholesky-factorize, escalating jitter on failure."""
    n = x_std.shape[0]
    d2 = _sq_dists(x_std, x_std)
    corr = np.exp(-d2 / (2.0 * kernel.length_scale ** 2))
    base = kernel.signal_var * corr + kernel.noise_var * np.eye(n)
    jitter = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(base + jitter * np.eye(n) if jitter else base)
            break
        except np.linalg.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 10.0
            if jitter > 1e-4:
                raise GpFitError("kernel matrix not PD") from None
    alpha = solve_triangular(chol.T, solve_triangular(chol, y_std, lower=True),
                             lower=False)
    return d2, corr, chol, alpha


class GpModel:
    """Fitted GP. Immutable after construction apart from a diagnostics counter."""

    def __init__(self, x_std: np.ndarray, y_std: np.ndarray, kernel: KernelParams,
                 x_mean: np.ndarray, x_scale: np.ndarray,
                 y_mean: float, y_scale: float):
        self.x_std = x_std
        self.y_std_targets = y_std
        self.kernel = kernel
        self.x_mean = x_mean
        self.x_scale = x_scale
        self.y_mean = y_mean
        self.y_scale = y_scale
        _, _, self.chol, self.alpha = _factorize(x_std, y_std, kernel)
        # Explicit inverse factor: one triangular solve per fit, then batched
        # posterior queries reduce to GEMMs (the projection hot path).
        self.chol_inv = solve_triangular(self.chol, np.eye(len(x_std)), lower=True)
        self.negative_variance_clamps = 0

    @property
    def n_points(self) -> int:
        return self.x_std.shape[0]

    @property
    def n_dims(self) -> int:
        return self.x_std.shape[1]

    def _standardize_query(self, xq: np.ndarray) -> tuple[np.ndarray, bool]:
        q = np.asarray(xq, dtype=np.float64)
        single = q.ndim == 1
        if single:
            q = q[None, :]
        if q.shape[1] != self.n_dims:
            raise ValueError("query dimension mismatch")
        return (q - self.x_mean) / self.x_scale, single

    def posterior(self, xq) -> tuple[np.ndarray | float, np.ndarray | float]:
        """Posterior mean and variance at query point(s), destandardized."""
        q, single = self._standardize_query(xq)
        k = self.kernel
        kstar = k.signal_var * np.exp(-_sq_dists(q, self.x_std) / (2.0 * k.length_scale ** 2))
        mean = self.y_mean + self.y_scale * (kstar @ self.alpha)
        v = self.chol_inv @ kstar.T
        var = k.signal_var - np.einsum("ij,ij->j", v, v)
        neg = var < 0.0
        if np.any(neg):
            self.negative_variance_clamps += int(np.count_nonzero(neg))
            var = np.maximum(var, 0.0)
        var = var * self.y_scale ** 2
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def posterior_mean(self, xq) -> np.ndarray | float:
        """Mean only; skips the variance solve (residual-GP hot path)."""
        q, single = self._standardize_query(xq)
        k = self.kernel
        kstar = k.signal_var * np.exp(-_sq_dists(q, self.x_std) / (2.0 * k.length_scale ** 2))
        mean = self.y_mean + self.y_scale * (kstar @ self.alpha)
        return float(mean[0]) if single else mean

    def log_marginal_likelihood(self) -> float:
        """LML of the standardized data under the current hyperparameters."""
        n = self.n_points
        return float(-0.5 * self.y_std_targets @ self.alpha
                     - np.sum(np.log(np.diag(self.chol)))
                     - 0.5 * n * _LOG_2PI)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "inputs_std": self.x_std.tolist(),
            "targets_std": self.y_std_targets.tolist(),
            "kernel": {"signal_var": self.kernel.signal_var,
                       "length_scale": self.kernel.length_scale,
                       "noise_var": self.kernel.noise_var},
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GpModel":
        return cls(
            x_std=np.array(data["inputs_std"], dtype=np.float64),
            y_std=np.array(data["targets_std"], dtype=np.float64),
            kernel=KernelParams(**data["kernel"]),
            x_mean=np.array(data["x_mean"], dtype=np.float64),
            x_scale=np.array(data["x_scale"], dtype=np.float64),
            y_mean=float(data["y_mean"]),
            y_scale=float(data["y_scale"]),
        )


def _neg_lml_and_grad(theta: np.ndarray, x_std: np.ndarray, y_std: np.ndarray,
                      noise_var: float) -> tuple[float, np.ndarray]:
    sf2, ell = float(np.exp(theta[0])), float(np.exp(theta[1]))
    kernel = KernelParams(signal_var=sf2, length_scale=ell, noise_var=noise_var)
    d2, corr, chol, alpha = _factorize(x_std, y_std, kernel)
    n = x_std.shape[0]
    lml = -0.5 * y_std @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * _LOG_2PI

    linv = solve_triangular(chol, np.eye(n), lower=True)
    kinv = linv.T @ linv
    outer = np.outer(alpha, alpha) - kinv
    dk_dlog_sf2 = sf2 * corr
    dk_dlog_ell = sf2 * corr * (d2 / ell ** 2)
    grad = np.array([0.5 * np.sum(outer * dk_dlog_sf2),
                     0.5 * np.sum(outer * dk_dlog_ell)])
    return -float(lml), -grad


def fit(X, y, kernel: KernelParams, optimize: bool = False,
        max_iter: int = 100) -> GpModel:
    """Standardize, factorize, and optionally fit (signal_var, length_scale).

    The white-noise level stays fixed during optimization; three fixed
    restarts make the quasi-Newton search deterministic.
    """
    kernel.validate()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 1 and np.asarray(y).size != 1:
        X = X.T  # given as a flat vector of 1-d inputs
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")

    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale < 1e-12] = 1.0
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale < 1e-12:
        y_scale = 1.0
    x_std = (X - x_mean) / x_scale
    y_std = (y - y_mean) / y_scale

    chosen = kernel
    if optimize:
        theta0 = np.array([np.log(kernel.signal_var), np.log(kernel.length_scale)])
        starts = [theta0, theta0 + np.array([1.0, -1.0]), theta0 + np.array([-1.0, 1.0])]
        best_theta, best_nll = None, np.inf
        for s in starts:
            try:
                res = minimize(_neg_lml_and_grad, s, jac=True, method="L-BFGS-B",
                               args=(x_std, y_std, kernel.noise_var),
                               bounds=[(-8.0, 8.0), (-5.0, 5.0)],
                               options={"maxiter": max_iter})
            except GpFitError:
                continue
            if res.fun < best_nll:
                best_nll, best_theta = float(res.fun), res.x
        if best_theta is not None:
            chosen = KernelParams(signal_var=float(np.exp(best_theta[0])),
                                  length_scale=float(np.exp(best_theta[1])),
                                  noise_var=kernel.noise_var)

    return GpModel(x_std, y_std, chosen, x_mean, x_scale, y_mean, y_scale)


def thin(X, y, n_max: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random subset of size n_max, temporal order preserved."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n <= n_max:
        return X, y
    idx = rng.subset_indices(n, n_max)
    return X[idx], y[idx]
