"""Bistochastic matrix families: paired-swap blocks, regular digraph walks,
convex mixtures of permutations, shuffle-fold transition matrices, and
uniform-ish 0/(1/r) matrices by permutation superposition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (Permutation, SparseBistochastic, ValidationError, compose,
                   read_matrix_market, sample_permutation)

PROB_TOL = 1e-12


class RejectionBudgetExceeded(RuntimeError):
    pass


def gen_figure1(n, p):
    """Q = p I + (1-p) pair-swap, pairs (2i, 2i+1); two entries per row."""
    if n % 2 != 0 or n < 2:
        raise ValidationError("n must be even and >= 2")
    if not (0.0 < p < 1.0):
        raise ValidationError("p must be in (0, 1)")
    rows = []
    for x in range(n):
        partner = x + 1 if x % 2 == 0 else x - 1
        rows.append([(x, p), (partner, 1.0 - p)])
    return SparseBistochastic.from_rows(n, rows)


def gen_regular_digraph(adjacency, r):
    """Simple random walk on an r-regular digraph: Q_xy = 1/r iff (x,y) edge."""
    if r < 2:
        raise ValidationError("r must be >= 2")
    n = len(adjacency)
    indeg = np.zeros(n, dtype=np.int64)
    rows = []
    for x, nbrs in enumerate(adjacency):
        if len(set(nbrs)) != len(nbrs):
            raise ValidationError(f"vertex {x}: repeated out-neighbor")
        if len(nbrs) != r:
            raise ValidationError(f"vertex {x}: out-degree {len(nbrs)} != {r}")
        for y in nbrs:
            indeg[y] += 1
        rows.append([(y, 1.0 / r) for y in nbrs])
    bad = np.nonzero(indeg != r)[0]
    if len(bad):
        raise ValidationError(f"vertex {int(bad[0])}: in-degree {int(indeg[bad[0]])} != {r}")
    return SparseBistochastic.from_rows(n, rows)


def gen_birkhoff(p, sigmas):
    """Q = sum_i p_i M_i; weights on colliding arcs merge additively."""
    p = np.asarray(p, dtype=np.float64)
    r = len(p)
    if r < 2 or len(sigmas) != r:
        raise ValidationError("need r >= 2 weights and as many permutations")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError("p is not a probability vector")
    n = sigmas[0].n
    if any(s.n != n for s in sigmas):
        raise ValidationError("permutation sizes differ")
    rows = []
    for x in range(n):
        acc = {}
        for pi, s in zip(p, sigmas):
            if pi > 0:
                y = s(x)
                acc[y] = acc.get(y, 0.0) + pi
        rows.append(sorted(acc.items()))
    return SparseBistochastic.from_rows(n, rows)


def overlap_set(sigmas):
    """{x : sigma_i(x) = sigma_j(x) for some i != j}."""
    if len(sigmas) < 2:
        raise ValidationError("need at least two permutations")
    n = sigmas[0].n
    out = set()
    for x in range(n):
        imgs = [s(x) for s in sigmas]
        if len(set(imgs)) < len(imgs):
            out.add(x)
    return out


def gen_shuffle_fold(n, r, sigma=None):
    """Transition matrix of the composed map (fold by r after an interval
    shuffle): cell i maps onto cells {r*s(i), ..., r*s(i)+r-1} mod n with
    weight 1/r each, where s defaults to the identity.

    Cells are 0-based; equals compose(sigma, gen_shuffle_fold(n, r)) entry
    for entry.
    """
    if r < 2 or n < r:
        raise ValidationError("need n >= r >= 2")
    if sigma is None:
        sigma = Permutation.identity(n)
    if sigma.n != n:
        raise ValidationError("permutation size mismatch")
    rows = []
    for i in range(n):
        base = r * sigma(i)
        rows.append(sorted(((base + k) % n, 1.0 / r) for k in range(r)))
    return SparseBistochastic.from_rows(n, rows)


def sample_uniform_regular(n, r, rng, max_attempts=10_000):
    """Superpose r independent uniform permutations; resample on any arc
    collision. Output is 0/(1/r) bistochastic. The law is uniform over such
    matrices weighted by their number of ordered permutation decompositions
    (not exactly uniform over matrices); it is invariant under left
    multiplication by any permutation matrix, which is what the composition
    experiments rely on.
    """
    if r < 2 or r > n:
        raise ValidationError("need 2 <= r <= n")
    for _ in range(max_attempts):
        sigmas = [sample_permutation(n, rng) for _ in range(r)]
        if not overlap_set(sigmas):
            return gen_birkhoff(np.full(r, 1.0 / r), sigmas)
    raise RejectionBudgetExceeded(
        f"no collision-free superposition in {max_attempts} attempts "
        f"(r={r} too close to n={n})")


# --- model specs -------------------------------------------------------------

@dataclass
class ModelSpec:
    """Tagged model description, parsed from a JSON document with a `model`
    discriminator. Variants: fig1, regular_digraph, birkhoff, shuffle_fold,
    uniform_regular, custom."""

    model: str
    params: dict = field(default_factory=dict)

    @staticmethod
    def from_json(doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        if "model" not in doc:
            raise ValidationError("missing `model` discriminator")
        d = dict(doc)
        return ModelSpec(model=d.pop("model"), params=d)

    def to_json(self):
        return {"model": self.model, **self.params}

    def build(self, rng=None):
        """Materialize the Q matrix. `rng` is only consulted by the random
        variants (uniform_regular, shuffle_fold/birkhoff with random sigmas)."""
        m, p = self.model, self.params
        if m == "fig1":
            return gen_figure1(int(p["n"]), float(p["p"]))
        if m == "regular_digraph":
            return gen_regular_digraph(p["adjacency"], int(p["r"]))
        if m == "birkhoff":
            sigmas = self._sigmas(p, rng)
            return gen_birkhoff(np.asarray(p["p"], dtype=np.float64), sigmas)
        if m == "shuffle_fold":
            sig = p.get("sigma")
            n = int(p["n"])
            if sig == "random":
                sig = sample_permutation(n, rng)
            elif sig is not None:
                sig = Permutation(np.asarray(sig, dtype=np.int64))
            return gen_shuffle_fold(n, int(p["r"]), sig)
        if m == "uniform_regular":
            return sample_uniform_regular(int(p["n"]), int(p["r"]), rng)
        if m == "custom":
            mat = p["matrix"]
            if isinstance(mat, str):
                return read_matrix_market(mat)
            return SparseBistochastic.from_dense(np.asarray(mat))
        raise ValidationError(f"unknown model {m!r}")

    @staticmethod
    def _sigmas(p, rng):
        if p.get("sigmas") == "random":
            n, r = int(p["n"]), len(p["p"])
            return [sample_permutation(n, rng) for _ in range(r)]
        return [Permutation(np.asarray(s, dtype=np.int64)) for s in p["sigmas"]]
