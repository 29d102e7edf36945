"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from conceptrefine import (GenerativeParams, perturb_dictionary,
                           random_orthonormal, sample_sparse_code,
                           synthesize_sample)


def brute_force_support(mat: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """Exhaustive argmax over all k-subsets of sum_i |<d_i, x>|.

    Independent of the selection implementation; only usable for small n.
    Ties are broken toward the lexicographically smallest subset, matching
    the smallest-index rule.
    """
    scores = np.abs(mat.T @ x)
    best, best_val = None, -np.inf
    for subset in combinations(range(mat.shape[1]), k):
        val = scores[list(subset)].sum()
        if val > best_val + 1e-15:
            best, best_val = subset, val
    return np.asarray(best, dtype=np.int64)


def make_instance(d, n, k, rho, seed, gamma=0.5, gamma_max=1.0, signs=True):
    """One generative instance: (params, dstar, dinit, sample)."""
    params = GenerativeParams(d=d, n=n, k=k, gamma=gamma, gamma_max=gamma_max)
    dstar = random_orthonormal(d, n, seed)
    dinit = perturb_dictionary(dstar, rho, seed + 1)
    sample = synthesize_sample(dstar, sample_sparse_code(params, seed + 2,
                                                         signs=signs))
    return params, dstar, dinit, sample


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
