"""Seeded randomness helpers.

Every stochastic operation in the toolkit draws from NumPy's PCG64 bit
generator seeded through ``SeedSequence``.  The algorithm is pinned by name
so that runs are reproducible across machines running the same NumPy
version; nothing in the package touches any other randomness source.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def generator(*entropy: int) -> np.random.Generator:
    """PCG64 generator seeded from one or more integers (order-sensitive)."""
    words = [int(word) & _MASK64 for word in entropy]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def sample_without_replacement(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k distinct indices drawn uniformly from range(n), in draw order."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} items from a population of {n}")
    return rng.permutation(n)[:k]
