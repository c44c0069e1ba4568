"""
SEEDING - Splittable Random Streams
===================================
One master seed per experiment, per-point seeds derived with
numpy SeedSequence.spawn so sibling streams never overlap.

Scheme (stable, documented contract):
    child_i = SeedSequence(master_seed).spawn(count)[i]
    seed_i  = child_i.generate_state(1, dtype=uint64)[0]

A run seeded with seed_i draws from default_rng(SeedSequence(seed_i)), so the
same seed replays bit-identically regardless of thread count or execution order.
"""

import numpy as np
import structlog

log = structlog.get_logger("lifi_commons.seeding")

SEED_MASK = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Fold any Python int into the unsigned 64-bit seed space."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"Seed must be an integer, got {type(seed).__name__}")
    return int(seed) & SEED_MASK


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Deterministically derive `count` independent 64-bit seeds from a master seed."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return []

    children = np.random.SeedSequence(normalize_seed(master_seed)).spawn(count)
    seeds = [int(cs.generate_state(1, dtype=np.uint64)[0]) for cs in children]
    log.debug("seeds_derived", master_seed=normalize_seed(master_seed), count=count)
    return seeds


def make_rng(seed: int) -> np.random.Generator:
    """NumPy Generator for a stored 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(normalize_seed(seed)))
