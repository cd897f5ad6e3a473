"""Deterministic pseudo-random number generation.

Everything stochastic in this package draws from :class:`Rng`, an in-repo
xorshift64* generator seeded through splitmix64. The stream depends only on
the seed, never on the platform, interpreter, or library versions, which is
what makes whole training runs byte-reproducible.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53


def _splitmix64(z: int) -> int:
    """One splitmix64 scramble step; used to spread raw seeds."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class Rng:
    """xorshift64* generator.

    State is a single nonzero 64-bit word. Seed 0 is legal at the API level:
    the splitmix64 scramble remaps it away from the forbidden all-zero state.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        state = _splitmix64(int(seed) & _MASK64)
        # splitmix64(x) == 0 only for one input; remap defensively anyway.
        self._state = state if state != 0 else 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (two uniforms per value, branch-free)."""
        u1 = 1.0 - self.uniform()  # in (0, 1], log-safe
        u2 = self.uniform()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z

    def integer(self, n: int) -> int:
        """Uniform integer in [0, n). Requires 0 < n <= 2**52."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)

    def integers(self, n: int, size: int) -> np.ndarray:
        return np.array([self.integer(n) for _ in range(size)], dtype=np.int64)

    def normal_array(self, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        flat = [self.normal(mean, std) for _ in range(int(np.prod(shape)))]
        return np.array(flat, dtype=np.float64).reshape(shape)

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        flat = [self.uniform_range(lo, hi) for _ in range(int(np.prod(shape)))]
        return np.array(flat, dtype=np.float64).reshape(shape)

    def subset_indices(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), returned sorted (temporal order).

        Partial Fisher-Yates; deterministic given the stream position.
        """
        if k >= n:
            return np.arange(n, dtype=np.int64)
        idx = list(range(n))
        for i in range(k):
            j = i + self.integer(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return np.array(sorted(idx[:k]), dtype=np.int64)
