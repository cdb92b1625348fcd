"""
Reproducible random number streams.

Every stochastic step draws from its own numpy Generator built from
SeedSequence([seed, *key]). Keys are assigned by counter before any work is
dispatched, so results do not depend on worker count or scheduling.
"""

import numpy as np

__all__ = ["stream", "derive_seed"]


def stream(seed: int, *key: int) -> np.random.Generator:
    """
    Generator for the stream identified by (seed, *key).

    Args:
        seed: Master seed (non-negative integer)
        key: Counter path, e.g. (replication,) or (s_index, chunk)

    Returns:
        numpy.random.Generator seeded deterministically from the key
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def derive_seed(seed: int, *key: int) -> int:
    """A 32-bit integer seed for the stream (seed, *key), for recording in outputs."""
    state = np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(1, dtype=np.uint32)
    return int(state[0])
