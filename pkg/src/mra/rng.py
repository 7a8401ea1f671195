"""Deterministic, splittable random streams.

Every randomized operation takes a 64-bit seed and derives child streams
from ``(seed, *path)`` where the path components are small integers or
short string tags.  Derivation goes through SHA-256 into a Philox
counter-based generator, so trial ``t`` of a Monte-Carlo run draws from
the same stream whether trials execute serially or in parallel.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_key(seed: int, *path) -> int:
    """Map (seed, *path) to a 128-bit Philox key, stable across platforms."""
    token = repr((int(seed) & _MASK64, *path)).encode("utf-8")
    digest = hashlib.sha256(token).digest()
    return int.from_bytes(digest[:16], "little")


def child_rng(seed: int, *path) -> np.random.Generator:
    """Generator for the stream addressed by (seed, *path)."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))
