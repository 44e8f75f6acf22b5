"""Deterministic stream derivation for reproducible parallel sampling.

Every Monte Carlo routine in this package draws from a ``random.Random``
stream obtained with :func:`derive_stream`.  The derivation is a chained
splitmix64 hash of the master seed and the stream indices (for example
``(path_index, chain_index)``), so a given address always yields the same
stream no matter how the work is chunked or scheduled across workers.
"""

from __future__ import annotations

import random

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix(master_seed: int, *indices: int) -> int:
    """64-bit mix of a master seed and any number of stream indices.

    ``mix(seed)`` hashes the seed alone; each extra index is hashed and
    folded in, so ``mix(s, i, c)`` differs from ``mix(s, i)`` and from
    ``mix(s, j, c)`` for i != j.
    """
    state = splitmix64(master_seed & _MASK64)
    for index in indices:
        state = splitmix64(state ^ splitmix64((index + 1) & _MASK64))
    return state


def derive_stream(master_seed: int, *indices: int) -> random.Random:
    """Independent RNG stream addressed by ``(master_seed, *indices)``."""
    return random.Random(mix(master_seed, *indices))
