"""Seeded random streams for reproducible sampling.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by an explicit 64-bit seed.  Derived streams (per graph,
per scenario, per trial) are obtained by spawning the seed with a small
integer path, so results do not depend on evaluation order and stay
stable when work is farmed out to worker processes.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_MASK64 = (1 << 64) - 1


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)):
        raise InvalidInputError(f"seed must be an integer, got {type(seed).__name__}")
    return int(seed) & _MASK64


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Return a Philox generator keyed by ``seed`` and an optional stream path.

    The same (seed, path) pair always yields the same stream.  Distinct
    paths under one seed give statistically independent streams.
    """
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, path) into a single 64-bit child seed."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(x) for x in path))
    return int(ss.generate_state(1, np.uint64)[0])
