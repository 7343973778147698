"""Counter-based uniform streams for reproducible Monte Carlo.

Every simulation draws its j-th uniform as a pure function of
``(seed, replica, j)`` through a splitmix64 output hash, so results do
not depend on scheduling, batching, or backend.  The compiled kernels in
``backends/_native.pyx`` implement the identical arithmetic; the numpy
helpers here are their vectorized mirror and the two must stay
bit-for-bit in sync.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4B9C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z = (x + GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, replica: int) -> int:
    """Derive the 64-bit key of the (seed, replica) uniform stream."""
    return mix64((mix64(seed & MASK64) + (replica * GAMMA)) & MASK64)


def uniform(key: int, counter: int) -> float:
    """The counter-th uniform of a stream, in [0, 1)."""
    z = mix64((key + counter * GAMMA) & MASK64)
    return (z >> 11) * _INV_2_53


def stream_keys(seed: int, replicas: int) -> np.ndarray:
    """Vector of stream keys for replicas 0..replicas-1 (uint64)."""
    r = np.arange(replicas, dtype=np.uint64)
    base = np.uint64(mix64(seed & MASK64))
    return _mix64_vec(base + r * np.uint64(GAMMA))


def uniform_vec(keys: np.ndarray, counter: int) -> np.ndarray:
    """Uniforms at one counter value for many streams at once."""
    z = _mix64_vec(keys + np.uint64((counter * GAMMA) & MASK64))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _mix64_vec(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class Stream:
    """Sequential view of one (seed, replica) stream."""

    def __init__(self, seed: int, replica: int = 0):
        self.key = stream_key(seed, replica)
        self.counter = 0

    def next_uniform(self) -> float:
        u = uniform(self.key, self.counter)
        self.counter += 1
        return u
