"""Deterministic RNG stream splitting.

Every random draw in the project comes from a named substream derived from
the master seed, so training runs, evaluations and baselines are exactly
reproducible and independent streams never interleave.  The rule:

    substream(seed, "episode", 17)   ->  Generator for episode 17's channel
    substream(seed, "explore")       ->  Generator for exploration noise

A substream is addressed by (seed, crc32(label), *indices) fed into
``numpy.random.SeedSequence``; crc32 is stable across platforms and Python
versions, so the mapping from names to streams is frozen.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, label: str, *indices: int) -> np.random.Generator:
    """Create the uniquely-addressed generator for (seed, label, indices)."""
    entropy = (int(seed), zlib.crc32(label.encode("utf-8")), *[int(i) for i in indices])
    return np.random.default_rng(np.random.SeedSequence(entropy))
