"""SplitMix64 random stream.

Every random field in the package is drawn from this generator so a seed
fully determines a run, independent of numpy's bit-generator versions.
The k-th output of seed ``s`` is ``mix(s + k * GOLDEN)`` (k = 1, 2, ...),
which vectorizes directly.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-style SplitMix64 generator.

    >>> SplitMix64(0).next_uint64()
    16294208416658607535
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def uint64(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * GOLDEN
            out = _mix(z)
        self.state = (self.state + n * int(GOLDEN)) & _MASK
        return out

    def next_uint64(self) -> int:
        return int(self.uint64(1)[0])

    def uniform(self, size, low=0.0, high=1.0) -> np.ndarray:
        """Doubles in ``[low, high)`` from the top 53 bits."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        u = (self.uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return (low + (high - low) * u).reshape(shape)

    def spawn(self) -> "SplitMix64":
        """Independent child stream seeded from this one."""
        return SplitMix64(self.next_uint64())
