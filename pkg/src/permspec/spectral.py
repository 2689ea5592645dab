"""Eigenvalue and singular-value machinery: dense spectra for plots, the
second eigenvalue modulus by dense solve or restarted Arnoldi on the
deflated operator, and empirical mixing rates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .core import ComposedChain, Permutation, apply_transpose, compose, deflated_apply

DENSE_CAP = 2000


class DenseCapExceeded(ValueError):
    """Matrix too large for a dense solve; use the Krylov path."""


@dataclass
class SpectralReport:
    method: str
    lambda2_modulus: float
    residual: float = 0.0
    iterations: int = 0
    converged: bool = True
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def to_json(self):
        return {
            "method": self.method,
            "lambda2": self.lambda2_modulus,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _as_chain(a):
    if isinstance(a, ComposedChain):
        return a
    return compose(Permutation.identity(a.n), a)


def full_spectrum(a, dense_cap=DENSE_CAP):
    """All eigenvalues of the densified matrix (LAPACK QR algorithm)."""
    chain = _as_chain(a)
    if chain.n > dense_cap:
        raise DenseCapExceeded(
            f"n={chain.n} exceeds dense cap {dense_cap}; use lambda2_modulus "
            "with method='krylov'")
    eig = np.linalg.eigvals(chain.p_dense())
    return SpectralReport(method="dense",
                          lambda2_modulus=_second_modulus(eig),
                          eigenvalues=eig)


def _second_modulus(eig):
    """Second largest modulus counting multiplicity, removing the Perron
    eigenvalue as the largest-modulus eigenvalue closest to 1."""
    if len(eig) == 1:
        return 0.0
    mods = np.abs(eig)
    top = np.max(mods)
    candidates = np.nonzero(mods >= top - 1e-12)[0]
    perron = candidates[np.argmin(np.abs(eig[candidates] - 1.0))]
    rest = np.delete(mods, perron)
    return float(np.max(rest))


def singular_values(a, dense_cap=DENSE_CAP):
    chain = _as_chain(a)
    if chain.n > dense_cap:
        raise DenseCapExceeded(f"n={chain.n} exceeds dense cap {dense_cap}")
    return np.linalg.svd(chain.p_dense(), compute_uv=False)


def lambda2_modulus(chain, method="dense", dense_cap=DENSE_CAP,
                    subspace=40, restarts=20, tol=1e-8, seed=1):
    """|lambda_2| of P = M Q.

    dense: from the full spectrum. krylov: implicitly restarted Arnoldi
    (ARPACK) on the deflated operator v -> Pv - (<1,v>/n) 1 restricted to the
    orthogonal complement of 1; the start vector is projected there and the
    operator re-projects every application, so Perron drift is suppressed.
    Complex conjugate pairs are handled natively by the (real) Arnoldi
    Ritz values.
    """
    chain = _as_chain(chain)
    n = chain.n
    if method == "dense":
        return full_spectrum(chain, dense_cap=dense_cap)
    if method != "krylov":
        raise ValueError(f"unknown method {method!r}")

    ones = np.ones(n)

    def op(v):
        w = deflated_apply(chain, v)
        return w - (w @ ones / n) * ones

    lo = spla.LinearOperator((n, n), matvec=op, dtype=np.float64)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    v0 = rng.standard_normal(n)
    v0 -= v0.mean()
    k = min(6, n - 2) if n > 3 else 1
    ncv = min(max(subspace, 2 * k + 2), n)
    try:
        vals, vecs = spla.eigs(lo, k=k, which="LM", v0=v0, ncv=ncv,
                               maxiter=restarts * ncv, tol=tol)
        converged = True
    except spla.ArpackNoConvergence as e:
        vals, vecs = e.eigenvalues, e.eigenvectors
        converged = False
    except spla.ArpackError:
        # breakdown (e.g. the deflated operator is numerically zero)
        norms = [np.linalg.norm(op(rng.standard_normal(n))) for _ in range(3)]
        return SpectralReport(method="krylov", lambda2_modulus=float(max(norms)),
                              residual=float(max(norms)), converged=True)
    if len(vals) == 0:
        return SpectralReport(method="krylov", lambda2_modulus=0.0,
                              converged=False)
    i = int(np.argmax(np.abs(vals)))
    lam, v = vals[i], vecs[:, i]
    vr = np.real(v).astype(np.float64)
    vi = np.imag(v).astype(np.float64)
    av = op(vr) + 1j * op(vi)
    residual = float(np.linalg.norm(av - lam * v) / max(np.linalg.norm(v), 1e-300))
    return SpectralReport(method="krylov", lambda2_modulus=float(np.abs(lam)),
                          residual=residual, iterations=k, converged=converged)


@dataclass
class MixingTrace:
    t_values: np.ndarray
    tv_distances: np.ndarray
    fitted_rate: float
    fit_window: tuple

    def to_json(self):
        return {
            "t": self.t_values.tolist(),
            "tv": self.tv_distances.tolist(),
            "fitted_rate": self.fitted_rate,
            "fit_window": list(self.fit_window),
        }


def mixing_trace(chain, pi0, t_max):
    """Total-variation distance to uniform along t = 1..t_max and a geometric
    rate fitted by least squares on the log of the second half of the trace
    (the first half is treated as transient)."""
    if t_max < 4:
        raise ValueError("t_max must be >= 4 for the rate fit")
    chain = _as_chain(chain)
    pi0 = np.asarray(pi0, dtype=np.float64)
    if np.any(pi0 < 0) or abs(pi0.sum() - 1.0) > 1e-9:
        raise ValueError("pi0 is not a probability vector")
    n = chain.n
    uniform = 1.0 / n
    pi = pi0.copy()
    tvs = np.empty(t_max)
    for t in range(t_max):
        pi = apply_transpose(chain, pi)
        tvs[t] = 0.5 * np.sum(np.abs(pi - uniform))
    # fit on the second half of the usable trace; entries at the floating
    # noise floor (TV ~ n * eps) would flatten the log-linear fit
    floor = max(1e-12, n * 1e-15)
    usable = t_max
    while usable > 0 and tvs[usable - 1] <= floor:
        usable -= 1
    usable = max(usable, 4) if t_max >= 4 else t_max
    lo = usable // 2
    window = np.arange(lo, usable)
    positive = tvs[window] > floor
    if positive.sum() >= 2:
        ts = window[positive] + 1.0
        logs = np.log(tvs[window][positive])
        slope = np.polyfit(ts, logs, 1)[0]
        rate = float(np.exp(slope))
    else:
        rate = 0.0
    return MixingTrace(t_values=np.arange(1, t_max + 1),
                       tv_distances=tvs, fitted_rate=rate,
                       fit_window=(lo + 1, usable))
