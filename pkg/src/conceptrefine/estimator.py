"""Prediction and loss evaluation for the sparse generative model.

The predictor for a selected support S is sum_{i in S} <d_i, x> r_i. Its
population squared loss against the target y = <x, z> over z ~ N(0, I) has
the closed form ||D*_S D_S^T x - x||^2 when the ground-truth dictionary is
column-orthogonal; a Monte-Carlo estimator over sampled z serves as an
independent oracle for that expression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import Dictionary, as_vector
from .selection import batch_top_k_supports, top_k_support

__all__ = [
    "LossReport",
    "mle_predict",
    "loss_closed_form",
    "loss_with_selected_support",
    "loss_aggregate",
    "loss_monte_carlo",
]

_MC_CHUNK = 1 << 17


@dataclass(frozen=True)
class LossReport:
    """A nonnegative loss value plus the support it was evaluated on
    (None for aggregates over per-sample supports)."""

    value: float
    support: np.ndarray | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("loss must be nonnegative")


def mle_predict(D, x: np.ndarray, r: np.ndarray, support: np.ndarray) -> float:
    """Predict y from observed responses: sum_{i in S} <d_i, x> r_i."""
    mat = D.mat if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)
    x = as_vector(x)
    r = as_vector(r)
    S = np.asarray(support, dtype=np.int64)
    if S.size == 0:
        return 0.0
    return float((mat[:, S].T @ x) @ r[S])


def loss_closed_form(D, dstar: Dictionary, x: np.ndarray,
                     support: np.ndarray) -> LossReport:
    """Population squared loss ||D*_S D_S^T x - x||^2 for an explicit S."""
    mat = D.mat if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)
    x = as_vector(x)
    if mat.shape[0] != x.shape[0] or dstar.d != x.shape[0]:
        raise ValueError("dimension mismatch")
    S = np.asarray(support, dtype=np.int64)
    resid = dstar.mat[:, S] @ (mat[:, S].T @ x) - x
    return LossReport(value=float(resid @ resid), support=S)


def loss_with_selected_support(D, dstar: Dictionary, x: np.ndarray,
                               k: int) -> LossReport:
    """Closed-form loss with S chosen by top-k magnitude selection."""
    return loss_closed_form(D, dstar, x, top_k_support(D, x, k))


def loss_aggregate(D, dstar: Dictionary, samples, k: int) -> LossReport:
    """Mean closed-form loss over samples, each with its own selected
    support."""
    if len(samples) == 0:
        raise ValueError("empty sample set")
    mat = D.mat if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)
    X = np.stack([s.x for s in samples])            # (m, d)
    R = X @ mat                                     # (m, n)
    supports = batch_top_k_supports(D, X, k)
    mask = np.zeros_like(R)
    np.put_along_axis(mask, supports, 1.0, axis=1)
    resid = (R * mask) @ dstar.mat.T - X            # (m, d)
    value = float(np.mean(np.einsum("md,md->m", resid, resid)))
    return LossReport(value=value, support=None)


def loss_monte_carlo(D, dstar: Dictionary, x: np.ndarray, k: int,
                     trials: int, seed: int) -> float:
    """Monte-Carlo estimate of the population squared loss.

    Averages (y - prediction)^2 over ``trials`` fresh draws of z with the
    support fixed by top-k selection. Chunked evaluation with a fixed chunk
    size keeps the reduction order, and therefore the result, deterministic
    for a given seed.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    x = as_vector(x)
    S = top_k_support(D, x, k)
    mat = D.mat if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)
    coef = mat[:, S].T @ x                          # (k,)
    proj = dstar.mat[:, S]                          # (d, k)
    rng = np.random.default_rng(seed)
    total = 0.0
    left = trials
    while left > 0:
        c = min(left, _MC_CHUNK)
        Z = rng.standard_normal((c, x.shape[0]))
        err = Z @ x - (Z @ proj) @ coef
        total += float(np.sum(err * err))
        left -= c
    return total / trials
