"""Counter-based pseudorandom streams.

Draw ``i`` of stream ``s`` under seed ``k`` is a pure function of
``(k, s, i)``: SplitMix64's output function applied to
``key(k, s) + (i + 1) * 0x9E3779B97F4A7C15`` (mod 2^64). Uniforms take the top
53 bits, offset by half a unit so they lie strictly inside (0, 1); normals
are the inverse-CDF transform of those uniforms. Because any draw can be
addressed directly, work may be split across trials, chunks or threads
without changing a single sample.

Stream identifiers are tuples of small integers and short strings, e.g.
``("noise", trial)``; they are folded into the key by repeated mixing.
"""
from __future__ import annotations

import zlib

import numpy as np
from scipy.special import ndtri

from . import _backend
from .errors import DomainError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _component(c) -> int:
    if isinstance(c, str):
        return zlib.crc32(c.encode()) | (1 << 40)
    if isinstance(c, (int, np.integer)) and not isinstance(c, bool) and c >= 0:
        return int(c)
    raise DomainError(f"stream id components must be non-negative ints or strings, got {c!r}")


def stream_key(seed: int, stream) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MASK64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if not isinstance(stream, tuple):
        stream = (stream,)
    key = mix64(int(seed) + GOLDEN)
    for c in stream:
        key = mix64(key ^ mix64(_component(c) + GOLDEN))
    return key


class CounterRNG:
    """Addressable uniform and normal streams under one seed."""

    def __init__(self, seed: int):
        stream_key(seed, 0)
        self.seed = int(seed)

    def uniform(self, stream, count: int, start: int = 0) -> np.ndarray:
        if count < 0 or start < 0:
            raise DomainError("count and start must be non-negative")
        return _backend.uniform_stream(stream_key(self.seed, stream), int(start), int(count))

    def normal(self, stream, count: int, start: int = 0) -> np.ndarray:
        return ndtri(self.uniform(stream, count, start))

    def signs(self, stream, count: int, start: int = 0) -> np.ndarray:
        """Equiprobable +-1 values."""
        return np.where(self.uniform(stream, count, start) < 0.5, -1.0, 1.0)
