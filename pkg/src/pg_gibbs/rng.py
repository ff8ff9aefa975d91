"""Reproducible random streams.

Every stream is a Philox (counter-based) generator keyed by ``(seed, *path)``,
so chain ``k`` of a run draws the same numbers regardless of how many other
chains exist or in which order they run.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(ss))


def chain_rngs(seed: int, n_chains: int) -> list[np.random.Generator]:
    return [make_rng(seed, k) for k in range(n_chains)]
