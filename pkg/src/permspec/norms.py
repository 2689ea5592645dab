"""Scalar parameters of a bistochastic matrix: normalized Hilbert-Schmidt
norm, entrywise max norm, its column-deleting relaxation with witness set,
the Gram support degree d, and their max rho."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


def exceptional_budget(n, delta):
    """Largest k >= 0 with k < n**(1 - delta). Integer boundary values of
    n**(1-delta) give k = n**(1-delta) - 1 (the strict inequality)."""
    t = float(n) ** (1.0 - delta)
    k = math.floor(t)
    if t == k:
        k -= 1
    return max(k, 0)


def hs_norm(a):
    """sqrt((1/n) sum_xy a_xy^2) over the stored entries.

    Entries are summed in sorted order so the result is invariant under row
    relabeling: a chain and its underlying matrix report bit-identical
    values.
    """
    d = np.sort(a.data)
    return math.sqrt(float(np.dot(d, d)) / a.n)


def linf_norm(a):
    return float(np.max(a.data))


def column_maxima(a):
    out = np.zeros(a.n)
    np.maximum.at(out, a.indices, a.data)
    return out


def delta_norm(a, delta):
    """Max entry after deleting the k worst columns, k the largest integer
    below n**(1-delta). Returns (value, witness column set).

    Removing the columns with the largest per-column maxima is exactly
    optimal since the objective is the max over surviving columns; ties
    break toward the lowest column index.
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must be in (0, 1]")
    k = exceptional_budget(a.n, delta)
    maxima = column_maxima(a)
    order = np.lexsort((np.arange(a.n), -maxima))
    witness = set(int(c) for c in order[:k])
    value = float(maxima[order[k]]) if k < a.n else 0.0
    return value, witness


def gram_support_degree(q):
    """max_x |{x' : (Q^T Q)_{x x'} != 0}|: columns sharing a stored row with
    column x, computed from row supports without forming the Gram matrix."""
    row_supports = [q.row(y)[0] for y in range(q.n)]
    cols_to_rows = [[] for _ in range(q.n)]
    for y in range(q.n):
        for c in row_supports[y]:
            cols_to_rows[c].append(y)
    best = 0
    for x in range(q.n):
        mates = set()
        for y in cols_to_rows[x]:
            mates.update(row_supports[y].tolist())
        best = max(best, len(mates))
    return best


def gram_support_adjacency(q):
    """Adjacency lists of the support graph K on columns: {x, x'} is an edge
    iff (Q^T Q)_{x x'} != 0. Every vertex is self-adjacent (positive
    diagonal)."""
    row_supports = [q.row(y)[0] for y in range(q.n)]
    adj = [set() for _ in range(q.n)]
    for y in range(q.n):
        cols = row_supports[y].tolist()
        for c in cols:
            adj[c].update(cols)
    return adj


@dataclass
class NormReport:
    n: int
    hs: float
    linf: float
    delta: float
    delta_norm: float
    witness_E: set
    d: int
    rho: float

    def to_json(self):
        return {
            "hs": self.hs,
            "linf": self.linf,
            "delta": self.delta,
            "delta_norm": self.delta_norm,
            "witness_E": sorted(self.witness_E),
            "d": self.d,
            "rho": self.rho,
        }

    def to_json_str(self):
        return json.dumps(self.to_json())


def rho(q, delta=1.0):
    """Full scalar report; rho = max(hs, delta-relaxed max norm)."""
    hs = hs_norm(q)
    dn, witness = delta_norm(q, delta)
    d = gram_support_degree(q)
    return NormReport(n=q.n, hs=hs, linf=linf_norm(q), delta=delta,
                      delta_norm=dn, witness_E=witness, d=d,
                      rho=max(hs, dn))
