"""Numerical laboratory for the spectral gap of bistochastic Markov chains
composed with random permutations."""

__version__ = "0.1.0"

from .core import (ComposedChain, Permutation, SparseBistochastic,
                   apply_chain, compose, deflated_apply, sample_permutation,
                   validate_bistochastic)
from .norms import NormReport, delta_norm, gram_support_degree, hs_norm, linf_norm, rho
from .spectral import SpectralReport, full_spectrum, lambda2_modulus, singular_values
