"""Deterministic pseudo-random number generation.

The generator algorithm is part of the reproducibility contract of this
package: every stochastic component (population initialisation, variation
operators, scan offsets, dataset sampling) draws from the xoshiro256**
generator seeded through SplitMix64, so a (seed, configuration) pair pins
down every output file bit for bit, independent of platform or process
count.

xoshiro256** and SplitMix64 follow the published recurrences of Blackman
and Vigna.  Bounded integer draws use bit-mask rejection on raw 64-bit
words, which is free of modulo bias.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class SplitMix64:
    """SplitMix64 stream, used to expand seeds into generator state."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def derive_seed(seed: int, tag: int) -> int:
    """Derive the seed of an independent sub-stream from ``(seed, tag)``.

    Splittable seeding: components that need their own generator (for
    example benchmark dataset sampling inside a seeded search run) derive
    it here instead of sharing draws with the parent stream.
    """
    return SplitMix64((seed ^ (tag * _GOLDEN)) & _MASK64).next_u64()


class Xoshiro256StarStar:
    """xoshiro256** generator with SplitMix64 state initialisation."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed: int) -> None:
        sm = SplitMix64(seed)
        self._s0 = sm.next_u64()
        self._s1 = sm.next_u64()
        self._s2 = sm.next_u64()
        self._s3 = sm.next_u64()

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by bit-mask rejection.

        64-bit words are drawn least-significant first, the assembled
        value is masked down to ``n.bit_length()`` bits, and masked values
        ``>= n`` are rejected and redrawn.  ``n == 1`` consumes no draw.
        """
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        if n == 1:
            return 0
        nbits = (n - 1).bit_length()
        nwords = (nbits + 63) // 64
        mask = (1 << nbits) - 1
        while True:
            value = 0
            for shift in range(0, nwords * 64, 64):
                value |= self.next_u64() << shift
            value &= mask
            if value < n:
                return value

    def next_float(self) -> float:
        """Uniform float64 in ``[0, 1)`` built from 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def bernoulli(self, p: float) -> bool:
        """True with probability ``p``, quantised to a 1/2**64 grid.

        ``p <= 0`` and ``p >= 1`` short-circuit without consuming a draw.
        """
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return self.next_u64() < round(p * 2.0 ** 64)
