import math

import numpy as np
import pytest

from permspec.core import Permutation, ValidationError, compose, validate_bistochastic
from permspec.generators import (ModelSpec, RejectionBudgetExceeded,
                                 gen_birkhoff, gen_figure1,
                                 gen_regular_digraph, gen_shuffle_fold,
                                 overlap_set, sample_uniform_regular)
from permspec.norms import hs_norm, linf_norm, rho
from permspec.rng import trial_stream


def test_figure1_n2():
    q = gen_figure1(2, 0.5)
    assert np.array_equal(q.to_dense(), [[0.5, 0.5], [0.5, 0.5]])


def test_figure1_n4_block():
    q = gen_figure1(4, 1 / 3).to_dense()
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[1, 1] = 1 / 3
    expected[0, 1] = expected[1, 0] = 1 - 1 / 3
    expected[2:, 2:] = expected[:2, :2]
    assert np.array_equal(q, expected)


@pytest.mark.parametrize("n,p", [(2, 0.5), (10, 0.2), (50, 1 / 3)])
def test_figure1_hs_norm(n, p):
    assert hs_norm(gen_figure1(n, p)) == pytest.approx(
        math.sqrt(p * p + (1 - p) ** 2), abs=1e-14)


def test_figure1_rejects_odd():
    with pytest.raises(ValidationError):
        gen_figure1(5, 0.5)


def test_regular_digraph_rejects_r1():
    cycle = [[(x + 1) % 4] for x in range(4)]
    with pytest.raises(ValidationError):
        gen_regular_digraph(cycle, 1)


def test_regular_digraph_two_shifts():
    adjacency = [[(x + 1) % 4, (x + 2) % 4] for x in range(4)]
    q = gen_regular_digraph(adjacency, 2)
    dense = q.to_dense()
    for x in range(4):
        assert dense[x, (x + 1) % 4] == 0.5
        assert dense[x, (x + 2) % 4] == 0.5
    rep = rho(q, 1.0)
    assert rep.rho == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert rep.d <= 4


def test_regular_digraph_degree_violation_names_vertex():
    adjacency = [[1, 2], [0, 2], [0, 1], [0, 1]]  # vertex 3 has in-degree 0
    with pytest.raises(ValidationError, match="vertex"):
        gen_regular_digraph(adjacency, 2)


def test_birkhoff_matches_figure1():
    n = 6
    pairswap = Permutation(np.array([1, 0, 3, 2, 5, 4]))
    q = gen_birkhoff([0.5, 0.5], [Permutation.identity(n), pairswap])
    assert np.array_equal(q.to_dense(), gen_figure1(n, 0.5).to_dense())


def test_birkhoff_collision_merges_to_identity():
    n = 5
    q = gen_birkhoff([0.3, 0.7], [Permutation.identity(n)] * 2)
    assert np.array_equal(q.to_dense(), np.eye(n))


def test_birkhoff_disjoint_thirds():
    n = 6
    sigmas = [Permutation(np.array([(x + k) % n for x in range(n)]))
              for k in (0, 1, 2)]
    q = gen_birkhoff([1 / 3] * 3, sigmas)
    assert q.max_row_support() == 3
    assert hs_norm(q) == pytest.approx(1 / math.sqrt(3), abs=1e-14)
    assert linf_norm(q) == pytest.approx(1 / 3)


def test_overlap_set_extremes():
    n = 7
    s = Permutation.identity(n)
    assert overlap_set([s, s]) == set(range(n))
    shifted = Permutation(np.array([(x + 1) % n for x in range(n)]))
    assert overlap_set([s, shifted]) == set()


def test_overlap_set_mean_size():
    # |S| counts x with sigma_1(x) = sigma_2(x): the fixed points of a
    # uniform random permutation, so E|S| = 1 exactly
    n, trials = 1000, 1000
    rng = trial_stream(5, 0)
    from permspec.core import sample_permutation
    sizes = []
    for _ in range(trials):
        sigmas = [sample_permutation(n, rng) for _ in range(2)]
        sizes.append(len(overlap_set(sigmas)))
    mean = np.mean(sizes)
    # |S| is approximately Poisson(1): sd ~ sqrt(1/trials)
    assert abs(mean - 1.0) < 4 * math.sqrt(1.0 / trials) + 0.05


def test_shuffle_fold_identity_support():
    q = gen_shuffle_fold(5, 3)
    dense = q.to_dense()
    for i in range(5):
        support = {(3 * i + k) % 5 for k in range(3)}
        assert {y for y in range(5) if dense[i, y] > 0} == support
        assert all(dense[i, y] == pytest.approx(1 / 3) for y in support)


def test_shuffle_fold_composition_identity(rng):
    from permspec.core import sample_permutation
    for _ in range(20):
        n = int(rng.integers(4, 30))
        r = int(rng.integers(2, min(n, 6) + 1))
        sigma = sample_permutation(n, rng)
        direct = gen_shuffle_fold(n, r, sigma)
        composed = compose(sigma, gen_shuffle_fold(n, r))
        assert np.array_equal(direct.to_dense(), composed.p_dense())


def test_shuffle_fold_hs():
    assert hs_norm(gen_shuffle_fold(5, 3)) == pytest.approx(1 / math.sqrt(3))


def test_shuffle_fold_rejects_small_n():
    with pytest.raises(ValidationError):
        gen_shuffle_fold(2, 3)


def test_uniform_regular_rejects_r_equals_n():
    with pytest.raises(RejectionBudgetExceeded):
        sample_uniform_regular(4, 4, trial_stream(0, 0), max_attempts=50)


def test_uniform_regular_deterministic():
    a = sample_uniform_regular(100, 3, trial_stream(9, 0))
    b = sample_uniform_regular(100, 3, trial_stream(9, 0))
    assert np.array_equal(a.to_dense(), b.to_dense())


def test_uniform_regular_structure():
    rng = trial_stream(10, 0)
    for _ in range(10):
        q = sample_uniform_regular(60, 3, rng)
        assert validate_bistochastic(q).ok
        dense = q.to_dense()
        assert np.all(np.sum(dense > 0, axis=0) == 3)
        assert np.all(np.sum(dense > 0, axis=1) == 3)
        assert np.all(np.isin(np.unique(dense), [0.0, 1 / 3]))


def test_generator_outputs_bistochastic(rng):
    outputs = [
        gen_figure1(10, 0.25),
        gen_regular_digraph([[(x + 1) % 6, (x + 2) % 6] for x in range(6)], 2),
        gen_shuffle_fold(11, 4),
        sample_uniform_regular(40, 3, rng),
    ]
    for q in outputs:
        rep = validate_bistochastic(q, 1e-12)
        assert rep.ok
        # 1/sqrt(d) <= HS norm on every model
        nr = rho(q, 1.0)
        assert 1.0 / math.sqrt(nr.d) <= nr.hs + 1e-12


def test_model_spec_round_trip():
    spec = ModelSpec.from_json({"model": "fig1", "n": 6, "p": 0.5})
    q = spec.build()
    assert np.array_equal(q.to_dense(), gen_figure1(6, 0.5).to_dense())
    assert spec.to_json() == {"model": "fig1", "n": 6, "p": 0.5}


def test_model_spec_requires_discriminator():
    with pytest.raises(ValidationError):
        ModelSpec.from_json({"n": 4})


def test_model_spec_random_variants():
    spec = ModelSpec.from_json({"model": "uniform_regular", "n": 30, "r": 3})
    q = spec.build(trial_stream(2, 0))
    assert validate_bistochastic(q).ok
    spec = ModelSpec.from_json(
        {"model": "shuffle_fold", "n": 12, "r": 3, "sigma": "random"})
    q = spec.build(trial_stream(2, 1))
    assert validate_bistochastic(q).ok
