"""Minimal dense ReLU networks with hand-rolled backprop and Adam.

Sized for the actor/critic nets used here (two hidden layers of 128). The
semantic contract for batched training is the mean of per-sample gradients;
forward/backward accept a leading batch dimension and compute that mean with
fixed-order BLAS reductions, so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import Rng


@dataclass
class Gradients:
    """Parameter gradients plus the gradient w.r.t. the network input."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray


class Network:
    """Feed-forward net: affine layers, ReLU on hidden, identity or tanh output."""

    def __init__(self, layer_dims: list[int], weights: list[np.ndarray],
                 biases: list[np.ndarray], output_activation: str = "identity"):
        if output_activation not in ("identity", "tanh"):
            raise ValueError("output_activation must be 'identity' or 'tanh'")
        self.layer_dims = list(layer_dims)
        self.weights = weights  # each (out, in)
        self.biases = biases  # each (out,)
        self.output_activation = output_activation

    @classmethod
    def create(cls, layer_dims: list[int], rng: Rng,
               output_activation: str = "identity",
               final_layer_scale: float = 1.0) -> "Network":
        """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.

        ``final_layer_scale`` shrinks the last layer (near-zero initial policy
        for the actor).
        """
        weights, biases = [], []
        n_layers = len(layer_dims) - 1
        for i in range(n_layers):
            fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform_array((fan_out, fan_in), -bound, bound)
            b = rng.uniform_array((fan_out,), -bound, bound)
            if i == n_layers - 1 and final_layer_scale != 1.0:
                w *= final_layer_scale
                b *= final_layer_scale
            weights.append(w)
            biases.append(b)
        return cls(layer_dims, weights, biases, output_activation)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Network":
        return Network(self.layer_dims, [w.copy() for w in self.weights],
                       [b.copy() for b in self.biases], self.output_activation)

    def copy_from(self, other: "Network") -> None:
        for wt, wo in zip(self.weights, other.weights):
            wt[...] = wo
        for bt, bo in zip(self.biases, other.biases):
            bt[...] = bo

    # -- forward / backward ---------------------------------------------

    def _check_input(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_dims[0]:
            raise ValueError(
                f"input dim {x.shape[1]} != expected {self.layer_dims[0]}")
        return x, single

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Deterministic forward pass; accepts (d,) or (batch, d)."""
        h, single = self._check_input(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i < last:
                np.maximum(h, 0.0, out=h)
            elif self.output_activation == "tanh":
                h = np.tanh(h)
        return h[0] if single else h

    def _forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        activations = [x]  # post-activation values per layer, input first
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i < last:
                np.maximum(h, 0.0, out=h)
            elif self.output_activation == "tanh":
                h = np.tanh(h)
            activations.append(h)
        return h, activations

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> Gradients:
        """Gradients of sum_b(output_b . upstream_b) w.r.t. parameters and input.

        ``upstream`` must match the output shape. Passing dLoss/doutput rows
        (e.g. already divided by the batch size) yields loss gradients. ReLU
        uses subgradient 0 at exactly zero pre-activation.
        """
        xb, single = self._check_input(x)
        up = np.asarray(upstream, dtype=np.float64)
        if single:
            up = up[None, :]
        _, acts = self._forward_cached(xb)
        if up.shape != acts[-1].shape:
            raise ValueError("upstream gradient shape mismatch")

        if self.output_activation == "tanh":
            delta = up * (1.0 - acts[-1] ** 2)
        else:
            delta = up.copy()

        grad_w: list[np.ndarray] = [None] * len(self.weights)  # type: ignore
        grad_b: list[np.ndarray] = [None] * len(self.biases)  # type: ignore
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = delta.T @ acts[i]
            grad_b[i] = delta.sum(axis=0)
            dh = delta @ self.weights[i]
            if i > 0:
                delta = dh * (acts[i] > 0.0)
        input_grad = dh
        return Gradients(grad_w, grad_b, input_grad[0] if single else input_grad)

    # -- serialization (bit-exact round trip) ----------------------------

    def to_dict(self) -> dict:
        flat: list[float] = []
        for w, b in zip(self.weights, self.biases):
            flat.extend(w.ravel().tolist())
            flat.extend(b.tolist())
        return {"layer_dims": self.layer_dims,
                "output_activation": self.output_activation,
                "params": flat}

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        dims = list(data["layer_dims"])
        flat = np.array(data["params"], dtype=np.float64)
        weights, biases, pos = [], [], 0
        for fan_in, fan_out in zip(dims, dims[1:]):
            weights.append(flat[pos:pos + fan_out * fan_in].reshape(fan_out, fan_in).copy())
            pos += fan_out * fan_in
            biases.append(flat[pos:pos + fan_out].copy())
            pos += fan_out
        if pos != flat.size:
            raise ValueError("parameter count does not match layer_dims")
        return cls(dims, weights, biases, data["output_activation"])


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one Network."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_network(cls, net: Network, lr: float) -> "AdamState":
        return cls(lr=lr,
                   m_w=[np.zeros_like(w) for w in net.weights],
                   v_w=[np.zeros_like(w) for w in net.weights],
                   m_b=[np.zeros_like(b) for b in net.biases],
                   v_b=[np.zeros_like(b) for b in net.biases])

    def to_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
                "eps": self.eps, "step": self.step,
                "m_w": [m.ravel().tolist() for m in self.m_w],
                "v_w": [v.ravel().tolist() for v in self.v_w],
                "m_b": [m.tolist() for m in self.m_b],
                "v_b": [v.tolist() for v in self.v_b]}

    @classmethod
    def from_dict(cls, data: dict, net: Network) -> "AdamState":
        st = cls.for_network(net, data["lr"])
        st.beta1, st.beta2, st.eps = data["beta1"], data["beta2"], data["eps"]
        st.step = data["step"]
        for dst, src in zip(st.m_w, data["m_w"]):
            dst[...] = np.array(src).reshape(dst.shape)
        for dst, src in zip(st.v_w, data["v_w"]):
            dst[...] = np.array(src).reshape(dst.shape)
        for dst, src in zip(st.m_b, data["m_b"]):
            dst[...] = np.array(src)
        for dst, src in zip(st.v_b, data["v_b"]):
            dst[...] = np.array(src)
        return st


def adam_step(net: Network, grads: Gradients, opt: AdamState) -> tuple[Network, AdamState]:
    """One bias-corrected Adam update, in place; returns the mutated pair."""
    opt.step += 1
    b1, b2 = opt.beta1, opt.beta2
    c1 = 1.0 - b1 ** opt.step
    c2 = 1.0 - b2 ** opt.step
    for params, gs, ms, vs in ((net.weights, grads.weights, opt.m_w, opt.v_w),
                               (net.biases, grads.biases, opt.m_b, opt.v_b)):
        for p, g, m, v in zip(params, gs, ms, vs):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)
    return net, opt


def polyak_update(target: Network, online: Network, tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, parameter-wise."""
    for wt, wo in zip(target.weights, online.weights):
        wt *= 1.0 - tau
        wt += tau * wo
    for bt, bo in zip(target.biases, online.biases):
        bt *= 1.0 - tau
        bt += tau * bo
