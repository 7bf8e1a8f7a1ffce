"""Seed derivation for independent, reproducible substreams.

Child seeds are derived from (seed, tag) with a SplitMix64 finalizer over an
FNV-1a hash of the tag, so substreams are decorrelated, stable across runs and
platforms, and independent of numpy's global state.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for the state ``x``."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def substream_seed(seed: int, tag: str) -> int:
    """Derive the 64-bit seed of the substream named ``tag`` under ``seed``."""
    return splitmix64((seed & _MASK64) ^ _fnv1a64(tag.encode("utf-8")))


def substream(seed: int, tag: str) -> np.random.Generator:
    """A PCG64 generator for the (seed, tag) substream."""
    return np.random.Generator(np.random.PCG64(substream_seed(seed, tag)))
