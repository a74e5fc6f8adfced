"""Deterministic seed derivation.

Every tree (and every benchmark replicate) owns a seed derived from the
master seed and its index with a splitmix64 finalizer, so results never
depend on the order in which workers pick up jobs.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    """One splitmix64 output step for the 64-bit state ``x``."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master_seed, index):
    """Seed for job ``index`` under ``master_seed``.

    ``derive_seed(s, k) = splitmix64(splitmix64(s) ^ k)`` reduced to 63 bits so
    it fits a signed 64-bit integer and round-trips through JSON.
    """
    if master_seed < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    return splitmix64(splitmix64(int(master_seed) & _MASK) ^ int(index)) >> 1


def as_generator(seed):
    """Return a ``numpy.random.Generator`` for an int seed or pass one through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    return np.random.default_rng(int(seed))
