"""
Seeding helpers shared across drlab.

Every random draw in the lab goes through a numpy ``Generator``. Generators
for independent workers are derived from ``(master_seed, index)`` pairs so
parallel runs never share a stream.
"""
import numpy as np


def make_rng(seed):
    """Return a fresh numpy Generator for a seed (int or SeedSequence)."""
    if isinstance(seed, (int, np.integer)):
        # numpy rejects negative seeds; fold signed 64-bit values onto unsigned
        seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.default_rng(seed)


def derive_seed(master_seed, index):
    """
    Derive a reproducible 64-bit seed for worker ``index`` of ``master_seed``.

    Args:
        master_seed: Seed of the whole experiment
        index: Worker / seed / cell index

    Returns:
        Python int usable as a numpy seed
    """
    sequence = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def derive_rng(master_seed, index):
    """Generator for worker ``index`` of ``master_seed``."""
    return make_rng(derive_seed(master_seed, index))
