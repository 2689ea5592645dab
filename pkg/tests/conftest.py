import numpy as np
import pytest

from permspec.core import Permutation, sample_permutation
from permspec.generators import gen_birkhoff
from permspec.rng import trial_stream


@pytest.fixture
def rng():
    return trial_stream(12345, 0)


def random_mix(rng, n, r, uniform=False):
    """Random convex mix of r permutations (a generic sparse bistochastic
    matrix with row support <= r)."""
    sigmas = [sample_permutation(n, rng) for _ in range(r)]
    if uniform:
        p = np.full(r, 1.0 / r)
    else:
        p = rng.random(r) + 0.1
        p /= p.sum()
    return gen_birkhoff(p, sigmas)


def shift_permutation(n, k):
    return Permutation(np.array([(x + k) % n for x in range(n)], dtype=np.int64))
