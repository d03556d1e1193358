"""Counter-based deterministic random number generation.

Every stochastic choice in the package (weight init, data synthesis, batch
shuffling) draws from `Stream`, a keyed counter RNG built on the splitmix64
finalizer.  The n-th value of a stream depends only on (key, n), so streams
can be split hierarchically without any draw-order coupling: regenerating
clip 17 of a dataset never depends on whether clips 0..16 were generated.

The mixer is the standard splitmix64 finalizer (Steele, Lea & Flood's
constants), applied to key ^ mix(counter).  All arithmetic is modulo 2^64,
which numpy's uint64 provides natively.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)
# 2^-53: scales a 53-bit integer into [0, 1)
_INV53 = float(2.0 ** -53)


def mix64(x: np.ndarray | int) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; accepts a python int or uint64 array."""
    z = np.uint64(x) if isinstance(x, int) else x
    with np.errstate(over="ignore"):  # wraparound is the point
        z = (z + _GOLDEN) & _U64
        z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _U64
        z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _U64
        return z ^ (z >> np.uint64(31))


def _fold(key: int, word: int) -> int:
    """Combine a key with one 64-bit word into a new key."""
    return int(mix64(np.uint64(key) ^ mix64(np.uint64(word))))


def _tag_to_word(tag: str | int) -> int:
    if isinstance(tag, int):
        return tag & 0xFFFFFFFFFFFFFFFF
    # FNV-1a over the UTF-8 bytes; cheap, stable across platforms.
    h = 0xCBF29CE484222325
    for b in tag.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


class Stream:
    """Keyed counter RNG.  `Stream(seed).child("weights", 3)` is stable."""

    def __init__(self, seed: int, _key: int | None = None):
        self.key = _fold(0x5EED, seed) if _key is None else _key
        self._counter = 0

    def child(self, *tags: str | int) -> "Stream":
        """Derive an independent stream; does not advance this one."""
        key = self.key
        for tag in tags:
            key = _fold(key, _tag_to_word(tag))
        return Stream(0, _key=key)

    def raw(self, n: int) -> np.ndarray:
        """Next n raw uint64 words."""
        idx = np.arange(self._counter, self._counter + n, dtype=np.uint64)
        self._counter += n
        return mix64(np.uint64(self.key) ^ mix64(idx))

    def uniform(self, shape=(), low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """float64 uniform in [low, high), from the top 53 bits of each word."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV53
        out = low + (high - low) * u
        return out.reshape(shape) if shape else float(out[0])

    def normal(self, shape=(), mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """float64 normals via Box-Muller; each value consumes two words."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        w = self.raw(2 * n)
        u1 = (w[:n] >> np.uint64(11)).astype(np.float64) * _INV53
        u2 = (w[n:] >> np.uint64(11)).astype(np.float64) * _INV53
        # u1 == 0 would send log to -inf; nudge to the smallest representable draw
        u1 = np.maximum(u1, _INV53)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        out = mean + std * z
        return out.reshape(shape) if shape else float(out[0])

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n int64 values uniform on [0, bound) via 64-bit modulo.

        The modulo bias is < bound/2^64, far below anything observable here;
        determinism matters more than perfect equidistribution.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self.raw(n) % np.uint64(bound)).astype(np.int64)

    def shuffle(self, items: list) -> list:
        """Fisher-Yates shuffle, returns a new list."""
        out = list(items)
        n = len(out)
        if n < 2:
            return out
        draws = self.raw(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] % np.uint64(i + 1))
            out[i], out[j] = out[j], out[i]
        return out
