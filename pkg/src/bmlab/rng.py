"""Counter-based SplitMix64 random stream.

Every trial of a sweep gets its own stream derived from ``(seed, index)``,
so results do not depend on execution order or on how work is split
between processes.

Constants (all 64-bit, arithmetic mod 2**64)::

    GAMMA = 0x9E3779B97F4A7C15      state increment per draw
    MIX1  = 0xBF58476D1CE4E5B9      z = (z ^ (z >> 30)) * MIX1
    MIX2  = 0x94D049BB133111EB      z = (z ^ (z >> 27)) * MIX2
                                    z =  z ^ (z >> 31)

A stream for ``(seed, index)`` starts at state ``mix(seed ^ mix(index + GAMMA))``.
Doubles take the top 53 bits: ``(z >> 11) * 2**-53``.
"""

from __future__ import annotations

import math

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential SplitMix64 generator; ``state`` is the counter."""

    def __init__(self, seed: int = 0, index: int | None = None):
        seed &= MASK
        if index is not None:
            seed = mix64(seed ^ mix64((index + GAMMA) & MASK))
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK
        return mix64(self.state)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi] (rejection sampling)."""
        span = hi - lo + 1
        if span <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            u = self.next_u64()
            if u < limit:
                return lo + u % span

    def normal(self) -> float:
        # Box-Muller, one value per call keeps the stream layout simple
        u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

    def spawn(self, index: int) -> "SplitMix64":
        return SplitMix64(self.state, index)


def stream(seed: int, index: int) -> SplitMix64:
    """Independent stream for trial ``index`` of a run seeded with ``seed``."""
    return SplitMix64(seed, index)
