"""Pinned random number generation.

All sampling goes through numpy's Philox-4x64-10 counter-based bit generator,
keyed per stream. Stream ``i`` of a run seeded with ``seed`` is keyed with
``seed XOR splitmix64(i)``, so a given (seed, streams, samples) triple
reproduces on every platform numpy supports.
"""
from typing import List

import numpy as np

PINNED_RNG = "numpy Philox-4x64-10"

_MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """One SplitMix64 output step for ``value`` (used as a 64-bit hash)."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_seed(seed: int, index: int) -> int:
    """Sub-seed for stream ``index``."""
    return (seed ^ splitmix64(index)) & _MASK64


def stream_generator(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for one stream of a seeded run."""
    return np.random.Generator(np.random.Philox(key=stream_seed(seed, index)))


def split_samples(total: int, streams: int) -> List[int]:
    """Divide ``total`` samples over ``streams``; earlier streams take the remainder."""
    base, extra = divmod(total, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]
