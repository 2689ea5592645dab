"""Reproducible random streams.

All randomness flows through numpy's Philox counter-based generator. The
stream for trial i of an experiment is keyed by the pair (master seed, i),
so results are identical across platforms and independent of how trials are
scheduled.
"""

import numpy as np

DEFAULT_SEED = 0x5EED


def master_stream(seed):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def trial_stream(seed, i):
    """Independent stream for trial i derived from (seed, i)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(i),))
    return np.random.Generator(np.random.Philox(seed=ss))
