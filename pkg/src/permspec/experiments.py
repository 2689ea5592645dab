"""Monte Carlo and exact experiments: second-eigenvalue tail estimates for
randomly permuted chains, exact enumeration over all permutations at tiny
sizes, the shuffle-fold mixing-rate sweep, and tangle-free frequency."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations as iter_permutations

import numpy as np
from scipy.stats import beta

from .core import Permutation, compose, sample_permutation
from .generators import ModelSpec, gen_shuffle_fold
from .norms import rho as norm_report
from .rng import trial_stream
from .spectral import DENSE_CAP, _second_modulus, full_spectrum, lambda2_modulus
from .tangle import TangleParams, pair_tangle_free


def theorem_epsilon(n, d, c1):
    """c1 * ln(d) / sqrt(ln(n)), natural logarithms."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if d < 2:
        raise ValueError("d must be >= 2")
    return c1 * math.log(d) / math.sqrt(math.log(n))


@dataclass
class ExperimentConfig:
    model: ModelSpec
    n: int
    trials: int
    seed: int
    delta: float = 1.0
    c0: float = 0.5
    c1: float = 1.0
    ell: int | None = None
    dense_cap: int = DENSE_CAP
    method: str = "dense"

    def __post_init__(self):
        if not (0.0 < self.c0 < self.delta <= 1.0):
            raise ValueError("need 0 < c0 < delta <= 1")
        if self.trials < 1:
            raise ValueError("need at least one trial")

    @staticmethod
    def from_json(doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        d = dict(doc)
        d["model"] = ModelSpec.from_json(d["model"])
        return ExperimentConfig(**d)

    def to_json(self):
        out = {
            "model": self.model.to_json(), "n": self.n, "trials": self.trials,
            "seed": self.seed, "delta": self.delta, "c0": self.c0,
            "c1": self.c1, "dense_cap": self.dense_cap, "method": self.method,
        }
        if self.ell is not None:
            out["ell"] = self.ell
        return out


@dataclass
class TrialReport:
    trial: int
    stream: str
    lambda2: float
    rho: float
    d: int
    ratio: float
    exceeded: bool
    converged: bool
    runtime_ms: float

    def to_json(self):
        return {
            "trial": self.trial, "stream": self.stream,
            "lambda2": self.lambda2, "rho": self.rho, "d": self.d,
            "ratio": self.ratio, "exceeded": self.exceeded,
            "converged": self.converged, "runtime_ms": self.runtime_ms,
        }


def run_trials(config):
    """One permutation sample per trial over a fixed Q; the norm report is
    computed once (rho and d do not depend on the permutation). Trial i uses
    the stream keyed by (seed, i), so reruns are bit-identical."""
    q = config.model.build(trial_stream(config.seed, 2**32))
    report = norm_report(q, config.delta)
    eps = theorem_epsilon(config.n, max(report.d, 2), config.c1)
    threshold = (1.0 + eps) * report.rho
    out = []
    for i in range(config.trials):
        t0 = time.perf_counter()
        rng = trial_stream(config.seed, i)
        sigma = sample_permutation(q.n, rng)
        chain = compose(sigma, q)
        spec = lambda2_modulus(chain, method=config.method,
                               dense_cap=config.dense_cap)
        lam = spec.lambda2_modulus
        out.append(TrialReport(
            trial=i, stream=f"({config.seed},{i})", lambda2=lam,
            rho=report.rho, d=report.d,
            ratio=lam / report.rho if report.rho > 0 else 0.0,
            exceeded=lam >= threshold, converged=spec.converged,
            runtime_ms=(time.perf_counter() - t0) * 1e3))
    return out


@dataclass
class TailEstimate:
    count: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    bound: float | None = None
    within_bound: bool | None = None

    def to_json(self):
        return {
            "count": self.count, "trials": self.trials,
            "estimate": self.estimate,
            "ci95": [self.ci_low, self.ci_high],
            "bound": self.bound, "within_bound": self.within_bound,
        }


def clopper_pearson(k, m, level=0.95):
    a = (1.0 - level) / 2.0
    lo = 0.0 if k == 0 else float(beta.ppf(a, k, m - k + 1))
    hi = 1.0 if k == m else float(beta.ppf(1.0 - a, k + 1, m - k))
    return lo, hi


def tail_probability(reports, epsilon, n=None, c0=None):
    """Fraction of trials with lambda2/rho >= 1 + epsilon, with a 95%
    Clopper-Pearson interval and an optional comparison against n^(-c0)."""
    if not reports:
        raise ValueError("no trial reports")
    m = len(reports)
    k = sum(1 for r in reports if r.ratio >= 1.0 + epsilon)
    lo, hi = clopper_pearson(k, m)
    bound = within = None
    if n is not None and c0 is not None:
        bound = float(n) ** (-c0)
        within = (k / m) <= bound
    return TailEstimate(count=k, trials=m, estimate=k / m,
                        ci_low=lo, ci_high=hi, bound=bound,
                        within_bound=within)


def exact_tail(q, threshold):
    """#{sigma : |lambda2(M Q)| >= threshold} / n! by full enumeration of the
    symmetric group with dense spectra; n <= 7. The comparison is slack by
    1e-9 so exact boundary values count."""
    if q.n > 7:
        raise ValueError("exact enumeration limited to n <= 7")
    dense = q.to_dense()
    count = 0
    total = 0
    for perm in iter_permutations(range(q.n)):
        lam = _second_modulus(np.linalg.eigvals(dense[list(perm), :]))
        if lam >= threshold - 1e-9:
            count += 1
        total += 1
    return Fraction(count, total)


@dataclass
class ShuffleFoldStudy:
    n: int
    r: int
    mode: str
    taus: np.ndarray = field(repr=False)
    tau_min: float = 0.0
    tau_max: float = 0.0
    tau_mean: float = 0.0
    tau_identity: float = 0.0
    closed_form_max: float | None = None
    mean_reference: float = 0.0
    coprime: bool = True

    def to_json(self):
        return {
            "n": self.n, "r": self.r, "mode": self.mode,
            "count": len(self.taus),
            "tau_min": self.tau_min, "tau_max": self.tau_max,
            "tau_mean": self.tau_mean, "tau_identity": self.tau_identity,
            "closed_form_max": self.closed_form_max,
            "mean_reference": self.mean_reference,
            "coprime": self.coprime,
        }


def shuffle_fold_closed_form_max(n, r):
    return math.sin(r * math.pi / n) / (r * math.sin(math.pi / n))


def shuffle_fold_study(n, r, mode="exhaustive", trials=200, seed=0):
    """Second-eigenvalue modulus of the shuffle-fold transition matrix over
    permutations: exhaustive for n <= 6, sampled otherwise. The closed-form
    max is only meaningful for gcd(n, r) = 1; otherwise the study downgrades
    to report-only."""
    coprime = math.gcd(n, r) == 1
    q_id = gen_shuffle_fold(n, r)

    def tau(sigma):
        chain = compose(sigma, q_id)
        return _second_modulus(np.linalg.eigvals(chain.p_dense()))

    tau_id = tau(Permutation.identity(n))
    if mode == "exhaustive":
        if n > 6:
            raise ValueError("exhaustive mode limited to n <= 6")
        taus = [tau(Permutation(np.asarray(p, dtype=np.int64)))
                for p in iter_permutations(range(n))]
    elif mode == "sampled":
        rng = trial_stream(seed, 0)
        taus = [tau_id] + [tau(sample_permutation(n, rng))
                           for _ in range(trials - 1)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    taus = np.asarray(taus)
    return ShuffleFoldStudy(
        n=n, r=r, mode=mode, taus=taus,
        tau_min=float(np.min(taus)), tau_max=float(np.max(taus)),
        tau_mean=float(np.mean(taus)), tau_identity=tau_id,
        closed_form_max=shuffle_fold_closed_form_max(n, r) if coprime else None,
        mean_reference=1.0 / math.sqrt(r), coprime=coprime)


@dataclass
class TangleFrequency:
    trials: int
    tangle_free: int
    frequency: float
    bound: float
    bound_vacuous: bool
    h: int
    ell: int

    def to_json(self):
        return {
            "trials": self.trials, "tangle_free": self.tangle_free,
            "frequency": self.frequency, "bound": self.bound,
            "bound_vacuous": self.bound_vacuous, "h": self.h, "ell": self.ell,
        }


def tangle_frequency(q, ell, params, trials, seed, delta=1.0):
    """Monte Carlo fraction of permutations whose pair with Q is
    ell-tangle-free, against the 1 - c*ell*d^(ell+2h)*n^(-delta) lower bound
    reported at c = 1 (the constant is not explicit; a bound below 0 is
    flagged vacuous)."""
    d = max(norm_report(q, delta).d, 2)
    count = 0
    for i in range(trials):
        sigma = sample_permutation(q.n, trial_stream(seed, i))
        ok, _ = pair_tangle_free(sigma, q, ell, params)
        count += ok
    bound = 1.0 - ell * float(d) ** (ell + 2 * params.h) * float(q.n) ** (-delta)
    return TangleFrequency(trials=trials, tangle_free=count,
                           frequency=count / trials, bound=bound,
                           bound_vacuous=bound < 0.0,
                           h=params.h, ell=ell)


def figure1_experiment(n, p, seed, csv_path, sidecar_path=None, png_path=None):
    """Single-realization eigencloud for the paired-swap model: eigenvalues
    to CSV, a JSON sidecar with the reference circle radius and the norm
    report, and (optionally) a rendered figure."""
    from .generators import gen_figure1
    q = gen_figure1(n, p)
    sigma = sample_permutation(n, trial_stream(seed, 0))
    chain = compose(sigma, q)
    spec = full_spectrum(chain)
    eig = spec.eigenvalues
    with open(csv_path, "w") as f:
        f.write("re,im\n")
        for z in eig:
            f.write(f"{float(z.real)!r},{float(z.imag)!r}\n")
    radius = math.sqrt(p * p + (1.0 - p) ** 2)
    sidecar = {
        "meta": {"n": n, "p": p, "seed": seed},
        "radius": radius,
        "lambda2": spec.lambda2_modulus,
        "norms": norm_report(q, 1.0).to_json(),
    }
    if sidecar_path is not None:
        with open(sidecar_path, "w") as f:
            json.dump(sidecar, f, indent=2)
            f.write("\n")
    if png_path is not None:
        from .plots import plot_eigencloud
        plot_eigencloud(eig, radius, png_path,
                        title=f"n={n}, p={p:g}, seed={seed}")
    return sidecar
