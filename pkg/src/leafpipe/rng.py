"""Seeded, platform-independent random number generation.

Every stochastic stage (augmentation draws, weight init, shuffles) pulls from
this counter-based SplitMix64 generator instead of numpy's RNG, so a given
seed produces the same stream on every platform and numpy version. Normal
variates come from Box-Muller over the uniform stream.

Substreams are derived with ``mix64``: hashing (seed, tag...) gives an
independent stream per image / per epoch, which makes batch-parallel work
order-independent.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4B7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# numpy constants for the vectorized path (array uint64 ops wrap silently)
_GOLDEN_U = np.uint64(_GOLDEN)
_MIX1_U = np.uint64(_MIX1)
_MIX2_U = np.uint64(_MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = float(2.0**-53)


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_arr(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MIX1_U
    z = (z ^ (z >> _S27)) * _MIX2_U
    return z ^ (z >> _S31)


def mix64(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit value (substream derivation)."""
    h = 0
    for p in parts:
        h = _mix_int((h + _GOLDEN) ^ (int(p) & _MASK))
    return h


class Rng:
    """Deterministic counter-based generator (SplitMix64 core).

    The k-th raw value is mix(seed + (k+1)*GOLDEN); the instance only tracks
    how many values have been consumed, so bulk draws are fully vectorized.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._consumed = 0

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit values as a uint64 array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        start = self._consumed + 1
        self._consumed += n
        counters = np.arange(start, start + n, dtype=np.uint64)
        return _mix_arr(np.uint64(self.seed) + counters * _GOLDEN_U)

    def uniform(self, n: int = 1, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """n uniform floats in [low, high)."""
        u = (self.u64(n) >> _S11).astype(np.float64) * _INV53
        return low + u * (high - low)

    def normal(self, n: int = 1, std: float = 1.0) -> np.ndarray:
        """n standard-normal draws scaled by std (Box-Muller pairs)."""
        m = (n + 1) // 2
        raw = self.u64(2 * m)
        # u1 in (0, 1] keeps log() finite; u2 in [0, 1)
        u1 = ((raw[:m] >> _S11).astype(np.float64) + 1.0) * _INV53
        u2 = (raw[m:] >> _S11).astype(np.float64) * _INV53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n] * std

    def bernoulli(self, p: float) -> bool:
        return bool(self.uniform(1)[0] < p)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) (argsort of 64-bit keys)."""
        return np.argsort(self.u64(n), kind="stable")

    def spawn(self, *tags: int) -> "Rng":
        """Independent child stream keyed by (seed, tags...)."""
        return Rng(mix64(self.seed, *tags))
