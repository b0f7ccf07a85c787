"""Seeded random draws on a documented, frozen generator.

Every stochastic routine in this package takes a :class:`SeededRng`, a thin
wrapper around numpy's PCG64 bit generator.  Equal seeds give bit-identical
draw sequences for a given build (numpy keeps Generator streams stable within
a numpy version; cross-library or cross-version stability is not promised).

A SeededRng is single-owner: never share one instance between concurrently
running chains.  Independent streams come from :func:`derive_seed`, a
splitmix64 mix of (master seed, index); sequential seeds are never used.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """Mix a master seed and an index into a fresh 64-bit seed.

    splitmix64 finalizer applied to master + (index + 1) * golden ratio
    increment.  Used for replicate and per-column stream splitting.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    z = (int(master) + (int(index) + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class SeededRng:
    """Deterministic random stream (PCG64 behind numpy's Generator)."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))

    def spawn(self, index: int) -> "SeededRng":
        """Independent stream keyed by (this seed, index)."""
        return SeededRng(derive_seed(self.seed, index))

    # ------------------------------------------------------------------
    # scalar draws
    # ------------------------------------------------------------------
    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        if not high >= low:
            raise ValueError("uniform requires high >= low")
        return float(self.generator.uniform(low, high))

    def normal(self, mean: float = 0.0, var: float = 1.0) -> float:
        """One draw from N(mean, var); var = 0 is the degenerate point mass."""
        if not var >= 0.0:
            raise ValueError("normal variance must be >= 0")
        if var == 0.0:
            return float(mean)
        return float(mean + np.sqrt(var) * self.generator.standard_normal())

    def gamma(self, shape: float, rate: float) -> float:
        """Gamma(shape, rate) with mean shape/rate."""
        if not (shape > 0.0 and rate > 0.0):
            raise ValueError("gamma shape and rate must be > 0")
        return float(self.generator.gamma(shape, 1.0 / rate))

    def inverse_gamma(self, shape: float, rate: float) -> float:
        """Inverse-Gamma(shape, rate): reciprocal of a Gamma(shape, rate) draw."""
        g = self.gamma(shape, rate)
        if g == 0.0:
            return float("inf")
        return 1.0 / g

    def beta(self, a: float, b: float) -> float:
        if not (a > 0.0 and b > 0.0):
            raise ValueError("beta parameters must be > 0")
        return float(self.generator.beta(a, b))

    def bernoulli(self, p: float) -> int:
        if not 0.0 <= p <= 1.0:
            raise ValueError("bernoulli probability must lie in [0, 1]")
        return int(self.generator.random() < p)

    # ------------------------------------------------------------------
    # block draws consumed by the sweep kernels
    # ------------------------------------------------------------------
    def uniform_block(self, size) -> np.ndarray:
        return self.generator.random(size)

    def normal_block(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def std_gamma_block(self, shape: float, size) -> np.ndarray:
        """Gamma(shape, 1) draws; callers rescale by their own rates."""
        if not shape > 0.0:
            raise ValueError("gamma shape must be > 0")
        return self.generator.standard_gamma(shape, size)

    def randint64(self) -> int:
        return int(self.generator.integers(0, 1 << 64, dtype=np.uint64))
