"""xorshift64* stream used for benchmark instances.

The generator is fixed (rather than numpy's) so that an instance is a pure
function of ``(n, k, seed)`` across numpy versions and languages. The seed is
expanded through one splitmix64 step so that small seeds give unrelated
streams and the all-zero state never occurs.
"""
from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
_DENOM = float((1 << 64) + 2)
_BELOW_ONE = math.nextafter(1.0, 0.0)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(int(seed) & MASK64)
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def uniform_open(self) -> float:
        """Value in the open interval (0, 1): ``(v + 1) / (2**64 + 2)``."""
        # the exact ratio is < 1 but rounds to 1.0 for the top ~2**10 outputs
        return min((self.next_u64() + 1) / _DENOM, _BELOW_ONE)

    def uniforms(self, count: int) -> list:
        return [self.uniform_open() for _ in range(count)]
