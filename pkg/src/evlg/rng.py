"""Counter-based splittable random streams (splitmix64).

Every shot, resample and synthetic draw in this package derives its own
64-bit stream key from a user seed plus integer context fields.  A stream's
k-th variate depends only on (key, k), so sampling order and shard layout
never change a single draw.  The same construction is implemented in the
compiled and fallback kernels; it must not be altered without updating both.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
_U53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """splitmix64 output scrambler (bijective on 64-bit ints)."""
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def derive_key(seed: int, fields: Iterable[int]) -> int:
    """Fold integer context fields into an independent 64-bit stream key.

    Each fold is a bijection of the running hash for a fixed field value,
    so distinct field tuples map to distinct keys up to 64-bit collisions.
    """
    h = seed & _MASK
    for f in fields:
        h = mix64(((h ^ (int(f) & _MASK)) + GAMMA) & _MASK)
    return h


def uniform_at(key: int, index: int) -> float:
    """The index-th uniform variate of the stream, in [0, 1).

    Random access: equals the value a Stream seeded with `key` returns on
    its (index+1)-th call.
    """
    state = (key + ((index + 1) * GAMMA)) & _MASK
    return (mix64(state) >> 11) * _U53


def mix64_vec(z: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array (wrapping array arithmetic)."""
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform_block(key: int, n: int, start: int = 0) -> np.ndarray:
    """Variates at positions [start, start+n) of one stream, as float64.

    Bit-identical to repeated `uniform_at(key, position)` calls.
    """
    pos = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    state = np.uint64(key & _MASK) + pos * np.uint64(GAMMA)
    return (mix64_vec(state) >> np.uint64(11)).astype(np.float64) * _U53


class Stream:
    """Sequential view of a counter-based stream of uniforms in [0, 1)."""

    __slots__ = ("key", "_index")

    def __init__(self, key: int):
        self.key = key & _MASK
        self._index = 0

    @classmethod
    def from_seed(cls, seed: int, *fields: int) -> "Stream":
        return cls(derive_key(seed, fields))

    def uniform(self) -> float:
        u = uniform_at(self.key, self._index)
        self._index += 1
        return u

    @property
    def draws(self) -> int:
        """Number of variates consumed so far."""
        return self._index
