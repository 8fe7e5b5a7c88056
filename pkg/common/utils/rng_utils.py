"""
Seeded random streams.

Independent tasks (permutation chunks, bootstrap replicates, resampling
repeats) each get their own child stream so results do not depend on the
order or thread in which tasks run.
"""
from typing import Optional

import numpy as np

from common.utils.errors import ConfigError


def require_seed(seed: Optional[int]) -> int:
    if seed is None:
        raise ConfigError("An explicit seed is required for randomized computations")
    if int(seed) != seed or seed < 0:
        raise ConfigError(f"Seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def generator(seed: int, *key: int) -> np.random.Generator:
    """Stream for a (seed, key...) task; identical keys give identical streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([require_seed(seed), *key])))

