"""Portable random numbers for instance generation.

The stream is Philox4x64-10 keyed directly by the seed with counter zero
(numpy's ``Philox(key=seed)``), so any implementation of that generator
reproduces it.  Uniforms take the top 53 bits of each 64-bit word and are
shifted into ``(0, 1]``; normals come from the Box-Muller transform applied
to consecutive pairs of uniforms, cosine branch first.
"""

from __future__ import annotations

import numpy as np


class PortableRNG:
    """Seeded stream of uniforms and standard normals.

    Parameters
    ----------
    seed : int
        Non-negative integer below ``2**128``.
    """

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        self._bits = np.random.Philox(key=seed)

    def raw(self, size):
        return self._bits.random_raw(size)

    def uniform(self, size=None):
        """Uniforms in ``(0, 1]``."""
        k = 1 if size is None else int(np.prod(size))
        u = ((self.raw(k) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None):
        """Standard normals by Box-Muller."""
        k = 1 if size is None else int(np.prod(size))
        pairs = (k + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        t = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(t)
        z[1::2] = r * np.sin(t)
        return float(z[0]) if size is None else z[:k].reshape(size)

    def integers(self, low, high):
        """Integer in ``[low, high)``."""
        return int(low + min(int(self.uniform() * (high - low)), high - low - 1))

    def child(self, k):
        """Independent stream for work item ``k`` (deterministic under parallel execution)."""
        return PortableRNG((self.seed * 1_000_003 + 7919 * (k + 1)) % 2**127)
