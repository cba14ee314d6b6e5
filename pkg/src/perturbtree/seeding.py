"""Reproducible random streams.

All randomness goes through numpy's counter-based Philox bit generator.  A
stream is identified by a master seed plus a tuple of integer keys (trial
index, phase tag, ...), so streams for different phases never overlap.
"""

from __future__ import annotations

import zlib

import numpy as np

SeedLike = int | np.random.Generator


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    spawn_key = tuple(_key(k) for k in keys)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def derive_seed(seed: int, *keys: int | str) -> int:
    """A 63-bit integer seed for the sub-stream ``(seed, *keys)``."""
    spawn_key = tuple(_key(k) for k in keys)
    state = np.random.SeedSequence(int(seed), spawn_key=spawn_key).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(int(seed))


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    return int(k)
