"""Coincidence and tangle machinery for paths through (M, Q), plus exact
path-sum evaluation of the truncated powers and remainder matrices and the
verification of the telescoping decomposition at desk scale.

A path of length k is (x_0, y_0, x_1, ..., y_{k-1}, x_k) with
Q[y_t, x_{t+1}] > 0 for every step t (0-based throughout; the x's index
columns of Q). Subpaths are contiguous windows plus shortcut windows
through every repeated-vertex pair x_i = x_j with i < j <= k-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .norms import gram_support_adjacency


class DeskScaleError(ValueError):
    """Inputs exceed the exact-enumeration guard."""


def default_h(n):
    """ceil(20 sqrt(ln n)); at small n this makes every connected pair of
    columns coincident, so meaningful desk-scale runs override it."""
    return max(1, math.ceil(20.0 * math.sqrt(math.log(max(n, 2)))))


@dataclass(frozen=True)
class TangleParams:
    h: int
    E: frozenset = frozenset()

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        object.__setattr__(self, "E", frozenset(self.E))

    @staticmethod
    def for_matrix(q, h=None, E=()):
        return TangleParams(h=default_h(q.n) if h is None else h, E=frozenset(E))


@dataclass(frozen=True)
class Path:
    """xs has one more element than ys; step t is (xs[t], ys[t], xs[t+1])."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) + 1:
            raise ValueError("need len(xs) == len(ys) + 1")

    @property
    def length(self):
        return len(self.ys)

    def validate(self, q):
        for t in range(self.length):
            cols, _ = q.row(self.ys[t])
            i = np.searchsorted(cols, self.xs[t + 1])
            if i >= len(cols) or cols[i] != self.xs[t + 1]:
                raise ValueError(f"step {t}: Q[{self.ys[t]}, {self.xs[t + 1]}] = 0")

    def to_json(self):
        seq = []
        for t in range(self.length):
            seq.extend([int(self.xs[t]), int(self.ys[t])])
        seq.append(int(self.xs[-1]))
        return seq


class ReachCache:
    """Lazily computed balls of radius h around each column in the Gram
    support graph K. K has self-loops ((Q^T Q) has positive diagonal), so
    positivity of the h-th power is graph distance <= h."""

    def __init__(self, q, h):
        self.adj = gram_support_adjacency(q)
        self.h = h
        self._balls = {}

    def ball(self, x):
        b = self._balls.get(x)
        if b is None:
            frontier = {x}
            seen = {x}
            for _ in range(self.h):
                nxt = set()
                for u in frontier:
                    nxt |= self.adj[u]
                frontier = nxt - seen
                if not frontier:
                    break
                seen |= frontier
            b = frozenset(seen)
            self._balls[x] = b
        return b

    def __contains__(self, pair):
        x, xp = pair
        return xp in self.ball(x)


def gram_reach(q, x, h):
    """{x' : ((Q^T Q)^h)_{x x'} > 0} as the BFS ball of radius h around x."""
    return set(ReachCache(q, h).ball(x))


def _subpath_windows(xs, ys):
    """Yield (x_seq, y_seq) of every subpath window (contiguous and
    shortcut) of the path."""
    k = len(ys)
    for s in range(k):
        for t in range(s, k):
            yield xs[s:t + 2], ys[s:t + 1]
    for j in range(1, k):
        for i in range(j):
            if xs[i] != xs[j]:
                continue
            for s in range(i + 1):
                for t in range(j, k):
                    yield (xs[s:i + 1] + xs[j + 1:t + 2],
                           ys[s:i] + (ys[j],) + ys[j + 1:t + 1])


def _is_coincidence_seq(x_seq, reach):
    interior = x_seq[:-1]
    return len(set(interior)) == len(interior) and (x_seq[0], x_seq[-1]) in reach


def _is_e_coincidence_seq(x_seq, E):
    interior = x_seq[:-1]
    return (len(set(interior)) == len(interior)
            and x_seq[0] == x_seq[-1] and x_seq[0] in E)


def is_coincidence(path, q, params):
    """The whole path, taken as a single window."""
    reach = ReachCache(q, params.h)
    return _is_coincidence_seq(path.xs, reach)


def is_e_coincidence(path, params):
    return _is_e_coincidence_seq(path.xs, params.E)


@dataclass
class PathTangleReport:
    tangle_free: bool
    coincidence_windows: int
    e_coincidence_windows: int
    distinct_coincidences: int
    distinct_e_coincidences: int


def is_tangle_free_path(path, q, params, reach=None):
    """Enumerate every subpath window, count coincidences and
    E-coincidences; tangle-free iff at most one coincidence window and no
    E-coincidence window. Distinct-sequence counts (the same subpath
    realized by several windows counted once) are reported alongside."""
    if reach is None:
        reach = ReachCache(q, params.h)
    cw = ew = 0
    cset, eset = set(), set()
    for x_seq, y_seq in _subpath_windows(tuple(path.xs), tuple(path.ys)):
        if _is_coincidence_seq(x_seq, reach):
            cw += 1
            cset.add((x_seq, y_seq))
        if _is_e_coincidence_seq(x_seq, params.E):
            ew += 1
            eset.add((x_seq, y_seq))
    return PathTangleReport(tangle_free=(cw <= 1 and ew == 0),
                            coincidence_windows=cw,
                            e_coincidence_windows=ew,
                            distinct_coincidences=len(cset),
                            distinct_e_coincidences=len(eset))


def _new_window_counts(xs, reach, E):
    """Coincidence / E-coincidence counts among the windows that end at the
    final step of the path (the only new windows after one extension)."""
    k = len(xs) - 1
    end = xs[k]
    coinc = ecoinc = 0
    seen = set()
    for s in range(k - 1, -1, -1):
        if xs[s] in seen:
            break
        seen.add(xs[s])
        if (xs[s], end) in reach:
            coinc += 1
        if xs[s] == end and xs[s] in E:
            ecoinc += 1
    for j in range(1, k):
        for i in range(j):
            if xs[i] != xs[j]:
                continue
            tail = xs[j + 1:k]
            if len(set(tail)) != len(tail):
                continue
            seen = set(tail)
            for s in range(i, -1, -1):
                if xs[s] in seen:
                    break
                seen.add(xs[s])
                if (xs[s], end) in reach:
                    coinc += 1
                if xs[s] == end and xs[s] in E:
                    ecoinc += 1
    return coinc, ecoinc


def pair_tangle_free(sigma, q, ell, params):
    """Whether every occurring path of length <= ell is tangle-free.

    Breadth-first over occurring paths (y_t = sigma(x_t) forced, x_{t+1}
    in the support of row sigma(x_t)), carrying incremental coincidence
    counts; a tangled branch is reported immediately, so a returned witness
    has minimal length. Returns (flag, witness Path or None).
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    reach = ReachCache(q, params.h)
    E = params.E
    frontier = [((x,), (), 0) for x in range(q.n)]
    for _ in range(ell):
        nxt = []
        for xs, ys, coinc in frontier:
            y = sigma(xs[-1])
            cols, _ = q.row(y)
            for xp in cols.tolist():
                nxs, nys = xs + (xp,), ys + (y,)
                dc, de = _new_window_counts(nxs, reach, E)
                if coinc + dc > 1 or de > 0:
                    return False, Path(nxs, nys)
                nxt.append((nxs, nys, coinc + dc))
        frontier = nxt
    return True, None


@dataclass
class PathMatrices:
    """Truncated powers over tangle-free paths: p_free[k] sums occurring
    tangle-free paths with M Q weights, p_under[k] sums all tangle-free
    paths with (M - 11^T/n) Q weights, r_mats[k] the remainder over paths
    with tangle-free halves that are tangled as a whole."""

    n: int
    ell: int
    p_free: list
    p_under: list
    r_mats: dict
    params: TangleParams = field(repr=False, default=None)


def _guard_desk_scale(q, ell):
    if q.n > 12 or ell > 4 or q.max_row_support() > 4:
        raise DeskScaleError(
            f"path sums need n <= 12, ell <= 4, row support <= 4 "
            f"(got n={q.n}, ell={ell}, support={q.max_row_support()})")


def path_sum_matrices(sigma, q, ell, params):
    """Exact path-sum evaluation of the truncated powers by enumeration."""
    _guard_desk_scale(q, ell)
    n = q.n
    reach = ReachCache(q, params.h)
    E = params.E
    smap = sigma.map

    p_free = [np.zeros((n, n)) for _ in range(ell + 1)]
    p_under = [np.zeros((n, n)) for _ in range(ell + 1)]
    r_mats = {k: np.zeros((n, n)) for k in range(1, ell + 1)}
    for k in (0,):
        np.fill_diagonal(p_free[k], 1.0)
        np.fill_diagonal(p_under[k], 1.0)

    # occurring tangle-free paths -> p_free
    for x0 in range(n):
        stack = [((x0,), (), 0, 1.0)]
        while stack:
            xs, ys, coinc, w = stack.pop()
            k = len(ys)
            if k > 0:
                p_free[k][x0, xs[-1]] += w
            if k == ell:
                continue
            y = int(smap[xs[-1]])
            cols, vals = q.row(y)
            for xp, qv in zip(cols.tolist(), vals.tolist()):
                nxs = xs + (xp,)
                dc, de = _new_window_counts(nxs, reach, E)
                if coinc + dc > 1 or de > 0:
                    continue
                stack.append((nxs, ys + (y,), coinc + dc, w * qv))

    # all-paths enumeration -> p_under and r_mats
    supp = [(y, int(c), float(v)) for y in range(n)
            for c, v in zip(*q.row(y))]
    minus = -1.0 / n

    def mbar(x, y):
        return (1.0 if smap[x] == y else 0.0) + minus

    def leaf(xs, ys, mq, qcum, jtangle):
        # jtangle = first depth at which the prefix was tangled
        occ = True
        occ_from = [False] * (ell + 1)
        occ_from[ell] = True
        for s in range(ell - 1, -1, -1):
            occ = occ and smap[xs[s]] == ys[s]
            occ_from[s] = occ
        for k in range(1, min(jtangle, ell) + 1):
            if not occ_from[k]:
                continue
            suffix = Path(xs[k:], ys[k:])
            if not is_tangle_free_path(suffix, q, params, reach).tangle_free:
                continue
            r_mats[k][xs[0], xs[-1]] += mq[k - 1] * qcum[ell] / qcum[k - 1]

    for x0 in range(n):
        # node: (xs, ys, coinc count, tangle depth or None, mq list, qcum list)
        stack = [((x0,), (), 0, None, [1.0], [1.0])]
        while stack:
            xs, ys, coinc, jt, mq, qcum = stack.pop()
            k = len(ys)
            if jt is None and k > 0:
                p_under[k][x0, xs[-1]] += mq[k]
            if k == ell:
                if jt is not None:
                    leaf(xs, ys, mq, qcum, jt)
                continue
            if jt is None:
                choices = supp
            else:
                # a tangled prefix only matters if the rest of the path
                # occurs, so extend along sigma only
                y = int(smap[xs[-1]])
                choices = [(y, int(c), float(v)) for c, v in zip(*q.row(y))]
            for y, xp, qv in choices:
                nxs = xs + (xp,)
                njt = jt
                ncoinc = coinc
                if jt is None:
                    dc, de = _new_window_counts(nxs, reach, E)
                    ncoinc = coinc + dc
                    if ncoinc > 1 or de > 0:
                        njt = k + 1
                stack.append((nxs, ys + (y,), ncoinc, njt,
                              mq + [mq[-1] * mbar(xs[-1], y) * qv],
                              qcum + [qcum[-1] * qv]))

    return PathMatrices(n=n, ell=ell, p_free=p_free, p_under=p_under,
                        r_mats=r_mats, params=params)


@dataclass
class DecompositionReport:
    ell: int
    pair_tangle_free: bool
    telescoping_residual: float
    power_identity_residual: float | None
    norm_bound_slack: float | None

    def to_json(self):
        return {
            "ell": self.ell,
            "pair_tangle_free": self.pair_tangle_free,
            "telescoping_residual": self.telescoping_residual,
            "power_identity_residual": self.power_identity_residual,
            "norm_bound_slack": self.norm_bound_slack,
        }


def verify_decomposition(sigma, q, ell, params):
    """Check, at desk scale:
    (i) the telescoping identity relating the truncated powers (an algebraic
        identity, tangled or not);
    (ii) that the plain power P^ell equals its tangle-free truncation when
        the pair is ell-tangle-free;
    (iii) the operator-norm bound of the deflated power by the truncated
        matrices, on tangle-free pairs.
    """
    _guard_desk_scale(q, ell)
    n = q.n
    mats = path_sum_matrices(sigma, q, ell, params)
    tf, _ = pair_tangle_free(sigma, q, ell, params)

    rhs = mats.p_under[ell].copy()
    for k in range(1, ell + 1):
        left = mats.p_under[k - 1] @ np.ones(n)
        right = np.ones(n) @ mats.p_free[ell - k]
        rhs += np.outer(left, right) / n
        rhs -= mats.r_mats[k] / n
    telescoping = float(np.max(np.abs(mats.p_free[ell] - rhs)))

    p_dense = q.to_dense()[sigma.map, :]
    power_res = None
    slack = None
    if tf:
        p_ell = np.linalg.matrix_power(p_dense, ell)
        power_res = float(np.max(np.abs(p_ell - mats.p_free[ell])))
        deflated = p_dense - 1.0 / n
        lhs = np.linalg.norm(np.linalg.matrix_power(deflated, ell), 2)
        bound = np.linalg.norm(mats.p_under[ell], 2)
        bound += sum(np.linalg.norm(mats.r_mats[k], 2)
                     for k in range(1, ell + 1)) / n
        slack = float(bound - lhs)
    return DecompositionReport(ell=ell, pair_tangle_free=tf,
                               telescoping_residual=telescoping,
                               power_identity_residual=power_res,
                               norm_bound_slack=slack)
