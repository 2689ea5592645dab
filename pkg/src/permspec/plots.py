"""Figure rendering for report outputs. Figures are written next to the
delimited data files; the CSV stays the canonical record."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_eigencloud(eigenvalues, radius, path, title=None):
    """Scatter of eigenvalues in the complex plane with the reference circle
    of the given radius and the unit circle."""
    eig = np.asarray(eigenvalues)
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    theta = np.linspace(0.0, 2.0 * np.pi, 400)
    ax.plot(np.cos(theta), np.sin(theta), color="0.8", lw=0.8)
    if radius is not None:
        ax.plot(radius * np.cos(theta), radius * np.sin(theta),
                color="red", lw=1.0)
    ax.scatter(eig.real, eig.imag, s=6, color="tab:blue", alpha=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mixing_trace(trace, path):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.semilogy(trace.t_values, np.maximum(trace.tv_distances, 1e-300),
                marker=".", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("TV distance to uniform")
    ax.set_title(f"fitted rate {trace.fitted_rate:.4g} "
                 f"(window {trace.fit_window[0]}..{trace.fit_window[1]})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_tau_histogram(study, path):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.hist(study.taus, bins=min(40, max(8, len(study.taus) // 10)),
            color="tab:blue", alpha=0.8)
    ax.axvline(study.mean_reference, color="k", ls="--", lw=1.0,
               label="1/sqrt(r)")
    if study.closed_form_max is not None:
        ax.axvline(study.closed_form_max, color="red", ls=":", lw=1.0,
                   label="closed-form max")
    ax.set_xlabel("|lambda2|")
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
