"""Deterministic RNG streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``.
Streams are derived from integer key tuples through ``SeedSequence`` so that
independent pieces of work (pool instances, trials, algorithms) can be
generated in any order, or in parallel, without changing their draws.
"""

import numpy as np

# Stream tags keep unrelated consumers of the same base seed independent.
POOL_STREAM = 11
NOISE_STREAM = 23
ALGO_STREAM = 37


def child_rng(*keys: int) -> np.random.Generator:
    """Generator keyed by a tuple of non-negative integers."""
    if any(k < 0 for k in keys):
        raise ValueError(f"rng keys must be non-negative, got {keys}")
    return np.random.default_rng(np.random.SeedSequence(list(keys)))
