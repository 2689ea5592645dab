"""Core types: sparse bistochastic matrices, permutations and their composition.

The composed chain P = M Q (M the permutation matrix of sigma) is never
materialized by arithmetic: row x of P is row sigma(x) of Q, so composition
is a pure row relabeling and matrix-vector products go through Q's CSR
storage plus an index gather.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

ROWSUM_TOL = 1e-12


class DimensionError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class SparseBistochastic:
    """Row-compressed nonnegative matrix with unit row and column sums.

    indptr/indices/data follow the usual CSR convention; column indices are
    strictly increasing inside each row and zero weights are never stored.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("dimension must be >= 1")
        if len(self.indptr) != self.n + 1:
            raise ValidationError("indptr length mismatch")
        if np.any(self.data <= 0) or not np.all(np.isfinite(self.data)):
            raise ValidationError("weights must be positive and finite")
        for x in range(self.n):
            cols = self.indices[self.indptr[x]:self.indptr[x + 1]]
            if len(cols) and np.any(np.diff(cols) <= 0):
                raise ValidationError(f"row {x}: columns not strictly increasing")
            if len(cols) and (cols[0] < 0 or cols[-1] >= self.n):
                raise ValidationError(f"row {x}: column index out of range")
        rep = validate_bistochastic(self, ROWSUM_TOL)
        if not rep.ok:
            raise ValidationError(
                f"not bistochastic: max row dev {rep.max_row_dev:.3e}, "
                f"max col dev {rep.max_col_dev:.3e}")

    @staticmethod
    def from_rows(n, rows):
        """Build from a per-row list of (column, weight) pairs (any order)."""
        indptr = np.zeros(n + 1, dtype=np.int64)
        indices = []
        data = []
        for x in range(n):
            entries = sorted(rows[x])
            indptr[x + 1] = indptr[x] + len(entries)
            indices.extend(c for c, _ in entries)
            data.extend(w for _, w in entries)
        return SparseBistochastic(n, indptr,
                                  np.asarray(indices, dtype=np.int64),
                                  np.asarray(data, dtype=np.float64))

    @staticmethod
    def from_dense(a, drop_tol=0.0):
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        rows = [[(y, a[x, y]) for y in range(n) if a[x, y] > drop_tol]
                for x in range(n)]
        return SparseBistochastic.from_rows(n, rows)

    def row(self, x):
        """(columns, weights) of row x, as views."""
        s, e = self.indptr[x], self.indptr[x + 1]
        return self.indices[s:e], self.data[s:e]

    def nnz(self):
        return len(self.data)

    def max_row_support(self):
        return int(np.max(np.diff(self.indptr)))

    def to_csr(self):
        return sp.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self):
        return self.to_csr().toarray()

    def entries(self):
        """Iterate (row, col, weight) in row-major order."""
        for x in range(self.n):
            cols, vals = self.row(x)
            for c, w in zip(cols, vals):
                yield x, int(c), float(w)


@dataclass(frozen=True)
class Permutation:
    """Bijection on [n]; position x stores sigma(x) (0-based)."""

    map: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.int64)
        object.__setattr__(self, "map", m)
        n = len(m)
        if n < 1:
            raise ValidationError("empty permutation")
        seen = np.zeros(n, dtype=bool)
        if np.any(m < 0) or np.any(m >= n):
            raise ValidationError("index out of range")
        seen[m] = True
        if not seen.all():
            raise ValidationError("not a bijection")

    @property
    def n(self):
        return len(self.map)

    @staticmethod
    def identity(n):
        return Permutation(np.arange(n, dtype=np.int64))

    def __call__(self, x):
        return int(self.map[x])

    def inverse(self):
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.map] = np.arange(self.n)
        return Permutation(inv)

    def matrix(self):
        """Dense permutation matrix M with M[x, sigma(x)] = 1."""
        m = np.zeros((self.n, self.n))
        m[np.arange(self.n), self.map] = 1.0
        return m


@dataclass
class ComposedChain:
    """P = M Q with P row x = Q row sigma(x)."""

    sigma: Permutation
    q: SparseBistochastic
    _p: SparseBistochastic | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.q.n

    @property
    def p(self):
        if self._p is None:
            rows = []
            for x in range(self.n):
                cols, vals = self.q.row(self.sigma(x))
                rows.append(list(zip(cols.tolist(), vals.tolist())))
            self._p = SparseBistochastic.from_rows(self.n, rows)
        return self._p

    def p_dense(self):
        return self.q.to_dense()[self.sigma.map, :]

    def p_entry(self, x, y):
        cols, vals = self.q.row(self.sigma(x))
        i = np.searchsorted(cols, y)
        if i < len(cols) and cols[i] == y:
            return float(vals[i])
        return 0.0


@dataclass
class BistochasticReport:
    max_row_dev: float
    max_col_dev: float
    tol: float

    @property
    def ok(self):
        return self.max_row_dev <= self.tol and self.max_col_dev <= self.tol


def validate_bistochastic(a, tol=ROWSUM_TOL):
    """Report max row-sum and column-sum deviation from 1.

    Column sums come from a single accumulation pass over the stored
    entries; no transpose is materialized.
    """
    csum = np.concatenate(([0.0], np.cumsum(a.data)))
    row_sums = csum[a.indptr[1:]] - csum[a.indptr[:-1]]
    col_sums = np.bincount(a.indices, weights=a.data, minlength=a.n)
    return BistochasticReport(
        max_row_dev=float(np.max(np.abs(row_sums - 1.0))),
        max_col_dev=float(np.max(np.abs(col_sums - 1.0))),
        tol=tol)


def sample_permutation(n, rng):
    """Uniform permutation of [n] by Fisher-Yates, deterministic per stream."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    m = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        m[i], m[j] = m[j], m[i]
    return Permutation(m)


def compose(sigma, q):
    """P = M Q as a pure row relabeling of Q (no arithmetic)."""
    if sigma.n != q.n:
        raise DimensionError(f"permutation size {sigma.n} != matrix size {q.n}")
    return ComposedChain(sigma, q)


def apply_chain(chain, v):
    """P v computed matrix-free as (Q v) read through sigma."""
    v = np.asarray(v, dtype=np.float64)
    if len(v) != chain.n:
        raise DimensionError("vector length mismatch")
    return (chain.q.to_csr() @ v)[chain.sigma.map]


def deflated_apply(chain, v):
    """(P - (1/n) 1 1^T) v; maps the orthogonal complement of 1 to itself."""
    v = np.asarray(v, dtype=np.float64)
    if len(v) != chain.n:
        raise DimensionError("vector length mismatch")
    return apply_chain(chain, v) - (np.sum(v) / chain.n)


def apply_transpose(chain, v):
    """P^T v = Q^T M^T v, used for distribution evolution pi -> pi P."""
    v = np.asarray(v, dtype=np.float64)
    if len(v) != chain.n:
        raise DimensionError("vector length mismatch")
    u = np.zeros(chain.n)
    u[chain.sigma.map] = v
    return chain.q.to_csr().T @ u


# --- serialization -----------------------------------------------------------

def write_matrix_market(a, path):
    """Canonical Matrix Market coordinate real general, 1-based, row-major
    sorted coordinates, 17-significant-digit values."""
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{a.n} {a.n} {a.nnz()}\n")
        for x, y, w in a.entries():
            f.write(f"{x + 1} {y + 1} {w:.17g}\n")


def read_matrix_market(path):
    with open(path) as f:
        lines = f.readlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise ValidationError(f"{path}:1: missing MatrixMarket header")
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.startswith("%")]
    try:
        nr, nc, nnz = map(int, body[0][1].split())
    except (ValueError, IndexError):
        raise ValidationError(f"{path}:{body[0][0]}: bad size line")
    if nr != nc:
        raise ValidationError(f"{path}: matrix is not square ({nr}x{nc})")
    rows = [[] for _ in range(nr)]
    for lineno, ln in body[1:]:
        parts = ln.split()
        try:
            x, y, w = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise ValidationError(f"{path}:{lineno}: malformed entry")
        rows[x - 1].append((y - 1, w))
    return SparseBistochastic.from_rows(nr, rows)


def write_permutation(sigma, path):
    """One line: n followed by sigma(1)..sigma(n), 1-based."""
    with open(path, "w") as f:
        f.write(str(sigma.n) + " " + " ".join(str(v + 1) for v in sigma.map) + "\n")


def read_permutation(path):
    with open(path) as f:
        parts = f.read().split()
    n = int(parts[0])
    vals = [int(v) - 1 for v in parts[1:]]
    if len(vals) != n:
        raise ValidationError(f"{path}: expected {n} indices, got {len(vals)}")
    return Permutation(np.asarray(vals, dtype=np.int64))
