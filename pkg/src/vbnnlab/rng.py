"""Deterministic seeded RNG streams.

Every stochastic operation in the package draws from a stream derived from a
master seed plus a label path, e.g. ``substream(master, "data", n, seed_ix)``.
Streams with distinct paths are statistically independent (they come from
child SeedSequences of disjoint entropy), so sweep cells can run in any order
or in parallel and still reproduce bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["as_generator", "path_entropy", "substream"]


def path_entropy(part: int | str) -> int:
    """Map one path component to a stable 64-bit integer.

    Integers pass through (masked to 64 bits, offset to keep negatives
    distinct from positives); strings hash via SHA-256 so the mapping does
    not depend on PYTHONHASHSEED or platform.
    """
    if isinstance(part, bool):
        raise TypeError("bool is not a valid stream path component")
    if isinstance(part, int):
        return (part + (1 << 62)) & ((1 << 64) - 1)
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(master_seed: int, *path: int | str) -> np.random.Generator:
    """Return a Generator for the stream identified by (master_seed, *path)."""
    entropy = [path_entropy(master_seed)] + [path_entropy(p) for p in path]
    seq = np.random.SeedSequence(entropy)
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed: int | np.random.Generator) -> np.random.Generator:
    """Accept either a raw integer seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(seed)
