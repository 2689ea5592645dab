import itertools

import numpy as np
import pytest

from conftest import random_mix, shift_permutation
from permspec.core import (Permutation, SparseBistochastic, compose,
                           sample_permutation)
from permspec.generators import gen_figure1
from permspec.rng import trial_stream
from permspec.tangle import (DeskScaleError, Path, TangleParams, default_h,
                             gram_reach, is_coincidence, is_e_coincidence,
                             is_tangle_free_path, pair_tangle_free,
                             path_sum_matrices, verify_decomposition)


def occurring_paths(sigma, q, ell):
    """Every occurring path of length 1..ell (y_t = sigma(x_t) forced)."""
    frontier = [((x,), ()) for x in range(q.n)]
    for _ in range(ell):
        nxt = []
        for xs, ys in frontier:
            y = sigma(xs[-1])
            cols, _ = q.row(y)
            for xp in cols.tolist():
                path = (xs + (xp,), ys + (y,))
                yield Path(*path)
                nxt.append(path)
        frontier = nxt


def test_default_h():
    assert default_h(2) >= 1
    assert default_h(1000) == int(np.ceil(20 * np.sqrt(np.log(1000))))


def test_params_validation():
    with pytest.raises(ValueError):
        TangleParams(h=0)


def test_path_shape_and_validation():
    q = gen_figure1(4, 0.5)
    with pytest.raises(ValueError):
        Path((0, 1), (0, 1))
    good = Path((0, 0, 1), (0, 0))
    good.validate(q)
    bad = Path((0, 2), (0,))  # Q[0, 2] = 0 on the block-diagonal matrix
    with pytest.raises(ValueError):
        bad.validate(q)
    assert good.to_json() == [0, 0, 0, 0, 1]


def test_gram_reach_identity():
    q = SparseBistochastic.from_dense(np.eye(5))
    for h in (1, 3):
        assert gram_reach(q, 2, h) == {2}


def test_gram_reach_figure1():
    q = gen_figure1(6, 0.3)
    assert gram_reach(q, 0, 1) == {0, 1}
    assert gram_reach(q, 0, 4) == {0, 1}
    assert gram_reach(q, 4, 1) == {4, 5}


def test_gram_reach_cycle_growth():
    # row support {x, x+1}: Gram graph links columns within distance 1
    n = 8
    rows = [sorted([(x, 0.5), ((x + 1) % n, 0.5)]) for x in range(n)]
    q = SparseBistochastic.from_rows(n, rows)
    assert gram_reach(q, 0, 1) == {n - 1, 0, 1}
    assert gram_reach(q, 0, 2) == {n - 2, n - 1, 0, 1, 2}
    assert gram_reach(q, 0, n) == set(range(n))


def test_coincidence_single_step():
    # any length-1 path with x_1 in the ball around x_0 is a coincidence
    q = gen_figure1(4, 0.5)
    params = TangleParams(h=1)
    assert is_coincidence(Path((0, 1), (0,)), q, params)
    assert not is_coincidence(Path((0, 2), (0,)), q, params)


def test_e_coincidence_requires_closed_loop():
    params = TangleParams(h=1, E={0})
    assert is_e_coincidence(Path((0, 1, 0), (0, 1)), params)
    assert not is_e_coincidence(Path((1, 0, 1), (1, 0)), params)
    assert not is_e_coincidence(Path((0, 1, 2), (0, 1)), params)
    # repeated interior vertex disqualifies
    assert not is_e_coincidence(Path((0, 1, 0, 1, 0), (0, 1, 0, 1)), params)


def test_tangle_free_single_coincidence_allowed():
    q = gen_figure1(4, 0.5)
    params = TangleParams(h=1)
    rep = is_tangle_free_path(Path((0, 1), (0,)), q, params)
    assert rep.tangle_free
    assert rep.coincidence_windows == 1


def test_tangled_two_coincidences():
    # 0 -> 1 -> 0 inside one block: windows (0,1), (1,0), (0,1,0) all land
    # in the radius-1 ball, so at least two coincidences
    q = gen_figure1(4, 0.5)
    params = TangleParams(h=1)
    rep = is_tangle_free_path(Path((0, 1, 0), (0, 1)), q, params)
    assert not rep.tangle_free
    assert rep.coincidence_windows >= 2


def test_e_coincidence_makes_tangled():
    q = gen_figure1(4, 0.5)
    free = is_tangle_free_path(Path((0, 1), (0,)), q, TangleParams(h=1))
    assert free.tangle_free
    tangled = is_tangle_free_path(Path((0, 1, 0), (0, 1)), q,
                                  TangleParams(h=1, E={0}))
    assert not tangled.tangle_free
    assert tangled.e_coincidence_windows >= 1


def test_shortcut_windows_detect_hidden_loop():
    # x-sequence (0, 2, 0, 2): the shortcut through the repeated 0 gives
    # the window (0, 2) twice plus closed loops; distinct sequences
    # collapse duplicates
    n = 6
    rows = [sorted([(x, 0.5), ((x + 2) % n, 0.5)]) for x in range(n)]
    q = SparseBistochastic.from_rows(n, rows)
    path = Path((0, 2, 0, 2), (0, 2, 0))
    params = TangleParams(h=1)
    rep = is_tangle_free_path(path, q, params)
    assert not rep.tangle_free
    assert rep.coincidence_windows > rep.distinct_coincidences


def test_pair_tangle_free_ell1_no_E():
    # length-1 windows have a single interior vertex: at most one
    # coincidence, never an E-coincidence when E is empty
    rng = trial_stream(61, 0)
    for _ in range(10):
        n = int(rng.integers(3, 11))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        ok, witness = pair_tangle_free(sigma, q, 1, TangleParams(h=1))
        assert ok and witness is None


def test_pair_tangle_free_ell1_with_E():
    # E = {x} with Q[sigma(x), x] > 0 forces the closed loop x -> x
    q = gen_figure1(4, 0.5)
    sigma = Permutation.identity(4)
    ok, witness = pair_tangle_free(sigma, q, 1, TangleParams(h=1, E={0}))
    assert not ok
    assert witness.xs[0] == witness.xs[-1] == 0


def test_pair_tangle_free_witness_is_tangled():
    rng = trial_stream(67, 0)
    found = 0
    for i in range(30):
        n = int(rng.integers(4, 11))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        params = TangleParams(h=1)
        ok, witness = pair_tangle_free(sigma, q, 3, params)
        if ok:
            continue
        found += 1
        witness.validate(q)
        assert all(witness.ys[t] == sigma(witness.xs[t])
                   for t in range(witness.length))
        assert not is_tangle_free_path(witness, q, params).tangle_free
        # minimal: chopping the last step leaves a tangle-free prefix
        prefix = Path(witness.xs[:-1], witness.ys[:-1])
        if prefix.length:
            assert is_tangle_free_path(prefix, q, params).tangle_free
    assert found > 0


def test_pair_tangle_free_matches_path_oracle():
    rng = trial_stream(71, 0)
    for _ in range(25):
        n = int(rng.integers(3, 9))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        for E in (frozenset(), frozenset({0})):
            params = TangleParams(h=1, E=E)
            ok, _ = pair_tangle_free(sigma, q, 3, params)
            brute = all(
                is_tangle_free_path(p, q, params).tangle_free
                for p in occurring_paths(sigma, q, 3))
            assert ok == brute


def test_shift_pairs_certify_ell3():
    for n, shift in [(8, 2), (10, 4), (12, 4)]:
        q = gen_figure1(n, 0.3)
        ok, _ = pair_tangle_free(shift_permutation(n, shift), q, 3,
                                 TangleParams(h=1))
        assert ok


def test_prefix_property():
    # ell-tangle-free implies (ell-1)-tangle-free
    rng = trial_stream(73, 0)
    for _ in range(20):
        n = int(rng.integers(4, 11))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        params = TangleParams(h=1)
        if pair_tangle_free(sigma, q, 3, params)[0]:
            assert pair_tangle_free(sigma, q, 2, params)[0]
        if pair_tangle_free(sigma, q, 2, params)[0]:
            assert pair_tangle_free(sigma, q, 1, params)[0]


def test_desk_scale_guard():
    q = gen_figure1(14, 0.5)
    with pytest.raises(DeskScaleError):
        path_sum_matrices(Permutation.identity(14), q, 2, TangleParams(h=1))
    q = gen_figure1(8, 0.5)
    with pytest.raises(DeskScaleError):
        verify_decomposition(Permutation.identity(8), q, 5, TangleParams(h=1))


def test_path_sums_depth_zero_identity():
    q = gen_figure1(4, 0.5)
    mats = path_sum_matrices(Permutation.identity(4), q, 2, TangleParams(h=1))
    assert np.array_equal(mats.p_free[0], np.eye(4))
    assert np.array_equal(mats.p_under[0], np.eye(4))


def test_path_sums_depth_one_tangle_free_pair():
    # at a tangle-free pair, depth-1 truncations equal P and P - 11^T/n
    n = 8
    q = gen_figure1(n, 0.3)
    sigma = shift_permutation(n, 2)
    mats = path_sum_matrices(sigma, q, 2, TangleParams(h=1))
    p = q.to_dense()[sigma.map, :]
    assert np.max(np.abs(mats.p_free[1] - p)) < 1e-15
    assert np.max(np.abs(mats.p_under[1] - (p - 1.0 / n))) < 1e-14


def test_remainder_vanishes_at_length_one():
    # a length-1 path has a single window, so it can never collect two
    # coincidences: with E empty the depth-1 remainder is identically zero
    rng = trial_stream(89, 0)
    for _ in range(10):
        n = int(rng.integers(3, 9))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        mats = path_sum_matrices(sigma, q, 1, TangleParams(h=1))
        assert np.max(np.abs(mats.r_mats[1])) == 0.0


def test_power_identity_on_certified_pairs():
    for n, shift, ell in [(8, 2, 3), (10, 4, 3), (8, 2, 2)]:
        q = gen_figure1(n, 0.3)
        sigma = shift_permutation(n, shift)
        rep = verify_decomposition(sigma, q, ell, TangleParams(h=1))
        assert rep.pair_tangle_free
        assert rep.power_identity_residual < 1e-12
        assert rep.norm_bound_slack > -1e-10


def test_telescoping_identity_any_pair():
    # algebraic identity: holds whether or not the pair is tangle-free
    rng = trial_stream(79, 0)
    worst = 0.0
    saw_tangled = saw_free = False
    for _ in range(15):
        n = int(rng.integers(3, 9))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        ell = int(rng.integers(1, 4))
        rep = verify_decomposition(sigma, q, ell, TangleParams(h=1))
        worst = max(worst, rep.telescoping_residual)
        saw_tangled |= not rep.pair_tangle_free
        saw_free |= rep.pair_tangle_free
    assert worst < 1e-10
    assert saw_tangled  # the identity was actually exercised on tangled pairs


def test_telescoping_with_E():
    rng = trial_stream(83, 0)
    for _ in range(8):
        n = int(rng.integers(3, 9))
        q = random_mix(rng, n, 3)
        sigma = sample_permutation(n, rng)
        rep = verify_decomposition(sigma, q, 2, TangleParams(h=1, E={0, 1}))
        assert rep.telescoping_residual < 1e-10
