"""Deterministic RNG stream derivation.

Every randomized routine in the package takes a single integer seed and
derives independent substreams from it by hashing a path of integers
(e.g. ``(seed, vertex)`` or ``(seed, recursion_level, branch)``).  The
derivation is pure arithmetic, so results never depend on scheduling or
on how work is chunked across workers.

Two consumers:

* numpy-level code gets a ``numpy.random.Generator`` backed by Philox,
  keyed by the hashed path (``stream``);
* the compiled walk kernels use a splitmix64 state directly, seeded with
  the same hash (``mix64`` / ``derive_key``).
"""

from __future__ import annotations

import numpy as np

__all__ = ["mix64", "derive_key", "stream"]

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """Finalizing 64-bit mixer (splitmix64's output function).

    Bijective on 64-bit words, which keeps distinct derivation paths
    distinct.
    """
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_key(seed: int, *path: int) -> int:
    """Hash ``(seed, *path)`` into a single 64-bit stream key."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = mix64(seed)
    for p in path:
        key = mix64((key + _GOLDEN) ^ mix64(p & _MASK))
    return key


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent ``numpy.random.Generator`` for this path."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))
