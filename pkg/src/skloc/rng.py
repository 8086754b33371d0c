"""Deterministic random streams derived from one 64-bit seed.

Every random quantity in the package is drawn from a stream identified by
``(seed, purpose, *indices)``. Streams are Philox generators keyed through
``numpy.random.SeedSequence`` spawn keys, so two streams with different
identifiers are statistically independent and the same identifier always
reproduces the same numbers.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("ascii"))


def seed_sequence(seed: int, purpose: str, *indices: int) -> np.random.SeedSequence:
    key = (_tag(purpose),) + tuple(int(i) for i in indices)
    return np.random.SeedSequence(check_seed(seed), spawn_key=key)


def stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Generator for the stream ``(seed, purpose, *indices)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, purpose, *indices)))


def derived_seed(seed: int, purpose: str, *indices: int) -> int:
    """A 64-bit integer summarizing a stream id, for records and child runs."""
    return int(seed_sequence(seed, purpose, *indices).generate_state(1, np.uint64)[0])
