"""Deterministic 64-bit seed splitting.

Every stochastic component in the package draws its randomness from a
master seed through `split_seed`, so one seed fixes the whole pipeline:
instance k of an experiment, replica r of a PT run, and the swap stream
all get independent, reproducible substreams.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 finalization round of a 64-bit value."""
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def split_seed(master: int, index: int) -> int:
    """Derive substream `index` from `master`.

    Two mixing rounds keep substreams of nearby masters/indices
    uncorrelated; the map is pure, so callers may re-derive at will.
    """
    return splitmix64(splitmix64(master & MASK64) ^ ((index + 1) * GOLDEN & MASK64))


def rng_from(master: int, index: int) -> np.random.Generator:
    """numpy Generator seeded from substream (master, index)."""
    return np.random.default_rng(split_seed(master, index))
