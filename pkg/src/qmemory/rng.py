"""Seed derivation for replayable experiments.

Every random draw in the package goes through :func:`numpy.random.default_rng`
seeded with a plain integer. Experiments that need many independent streams
derive them from one base seed with :func:`derive_seed`: the substream for a
key ``(i, j, ...)`` is ``SeedSequence(base_seed, spawn_key=(i, j, ...))``,
collapsed to a 64-bit integer. The derived integer is what gets written to
result tables, so any single trial can be regenerated on its own with
``sample_sequence(machine, n, seed)``.
"""

import numpy as np


def derive_seed(base_seed: int, *key: int) -> int:
    """Deterministic 64-bit seed for substream ``key`` of ``base_seed``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))
