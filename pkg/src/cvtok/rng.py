"""SplitMix64, the only randomness source in the package.

Everything seeded here is reproducible bit-for-bit across platforms: the
generator is pure 64-bit integer arithmetic.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` by plain modulo reduction."""
        return self.next() % n

    def between(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)


def counter_mix(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorised ``mix64(seed + (counter + 1) * GAMMA)``.

    Equal to the ``counter``-th output (0-based) of ``SplitMix64(seed)``.
    """
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + (c + np.uint64(1)) * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates shuffle of ``range(n)`` driven by ``SplitMix64(seed)``.

    Index ``i`` runs from ``n - 1`` down to 1 and swaps with
    ``next() % (i + 1)``.
    """
    rng = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)
