"""Portable deterministic random numbers (splitmix64).

Every stochastic component in the package (dataset generation, weight
initialization, epoch shuffling, label noise) draws from this generator
so that seeds reproduce bit-identical streams on any platform.  The
update rule, per Steele et al.'s SplitMix:

    state  = (state + 0x9E3779B97F4A7C15) mod 2^64
    z      = state
    z      = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
    z      = (z XOR (z >> 27)) * 0x94D049BB133111EB  mod 2^64
    output = z XOR (z >> 31)

Doubles take the top 53 bits of an output word (uniform in [0, 1));
normals use the Box-Muller transform on two uniforms.
"""

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive(seed, *streams):
    """Derive a child seed from a base seed and stream identifiers.

    Runs the splitmix mix function over each identifier in turn, so
    (seed, epoch) pairs give decorrelated, reproducible streams.
    """
    state = seed & _MASK
    for s in streams:
        state = (state ^ (s & _MASK)) & _MASK
        state = (state + _GOLDEN) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        state = z ^ (z >> 31)
    return state


class SplitMix64:
    """Minimal splitmix64 stream with uniform/normal/shuffle helpers."""

    def __init__(self, seed):
        self._state = seed & _MASK

    def next_u64(self):
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_in(self, lo, hi):
        return lo + (hi - lo) * self.uniform()

    def normal(self):
        """Standard normal via Box-Muller (one value per pair of draws)."""
        u1 = self.uniform()
        while u1 == 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def integer(self, n):
        """Uniform integer in [0, n) by rejection (unbiased)."""
        if n <= 0:
            raise ValueError("integer() requires n >= 1")
        limit = _MASK - (_MASK + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def permutation(self, n):
        """Fisher-Yates permutation of range(n)."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
