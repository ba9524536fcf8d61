"""Derived random streams keyed by purpose and step."""

import numpy as np

LABELING = 0
ERROR_ESTIMATION = 1
_PAIR_BASE = 2


def pair_purpose(coordinate: int) -> int:
    """Stream purpose code of the score-estimation pairs for a coordinate."""
    return _PAIR_BASE + coordinate


def derive_rng(master_seed: int, purpose: int, step: int, draw: int = 0) -> np.random.Generator:
    """
    Independent generator for one (purpose, step, draw) key under a master seed.

    Streams depend only on their key, so the order in which they are consumed
    does not change any sample.
    """
    if master_seed < 0:
        raise ValueError(f"Master seed must be non-negative, got {master_seed}.")
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(purpose, step, draw)))


def derive_seed(master_seed: int, *key: int) -> int:
    """A 32-bit seed for a sub-run identified by key (grid point, repetition, ...)."""
    if master_seed < 0:
        raise ValueError(f"Master seed must be non-negative, got {master_seed}.")
    return int(np.random.SeedSequence(entropy=master_seed, spawn_key=key).generate_state(1)[0])
