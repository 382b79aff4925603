"""Deterministic randomness: counter-based Philox streams keyed per trial.

Every sampled experiment takes a (seed, trial) pair and gets an independent
substream, so results do not depend on execution order and a parallel run
aggregates to exactly the same numbers as a serial one.
"""

import numpy as np


def master_rng(seed: int) -> np.random.Generator:
    return trial_rng(seed, 0)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial of one seeded experiment."""
    if seed < 0 or trial < 0:
        raise ValueError("seed and trial index must be nonnegative")
    key = np.array([seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
