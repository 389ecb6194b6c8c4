"""Deterministic 64-bit stream generator (splitmix64).

One run owns three independent substreams (traffic destinations, generation
Bernoulli, routing intermediates) so that changing one policy knob never
perturbs another's draws. The same recurrence is implemented inside the
compiled engine kernel; this module is the reference implementation used by
the pure-Python surfaces and the tests.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= _MASK
    z ^= z >> 30
    z = (z * _MIX1) & _MASK
    z ^= z >> 27
    z = (z * _MIX2) & _MASK
    z ^= z >> 31
    return z


class RandomStream:
    """splitmix64 sequence; uniform floats carry 53 random bits."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return mix64(self._state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def randint(self, n: int) -> int:
        # 53-bit modulo; bias is O(n / 2^53), irrelevant at network sizes
        return (self.next_u64() >> 11) % n


def substreams(seed: int, count: int = 3) -> list[RandomStream]:
    root = RandomStream(seed)
    return [RandomStream(root.next_u64()) for _ in range(count)]
