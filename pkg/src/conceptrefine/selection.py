"""Concept selection rules: top-k magnitude selection, greedy selection by
normalized residual correlation, and entry-wise hard thresholding."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .linalg import Dictionary, as_matrix, as_vector

__all__ = [
    "top_k_support",
    "batch_top_k_supports",
    "ip_omp_select",
    "hard_threshold",
]

# relative cutoff below which a projected residual is treated as zero
_RESIDUAL_TOL = 1e-12


def _columns(D) -> np.ndarray:
    return D.mat if isinstance(D, Dictionary) else as_matrix(D)


def top_k_support(D, x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest |<d_i, x>|, sorted ascending.

    Ties are broken toward the smallest index so the result is a
    deterministic function of the inputs.
    """
    mat = _columns(D)
    x = as_vector(x)
    if k > mat.shape[1]:
        raise ValueError(f"k={k} exceeds {mat.shape[1]} columns")
    if k < 0:
        raise ValueError("k must be nonnegative")
    scores = np.abs(mat.T @ x)
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k]).astype(np.int64)


def batch_top_k_supports(D, X: np.ndarray, k: int) -> np.ndarray:
    """Top-k supports for a batch of samples (rows of X); (m, k) int64."""
    mat = _columns(D)
    scores = np.abs(X @ mat)
    return _kernels.topk_supports(scores, k)


def ip_omp_select(D, x: np.ndarray, k: int) -> np.ndarray:
    """Greedy selection by normalized correlation of projected residuals.

    At each step the column maximizing
    ``|<P d_i, P x>| / (||P d_i|| ||P x||)`` is picked, where P projects
    onto the orthogonal complement of the span of the already-selected
    columns. Selection stops early when the projected input or every
    remaining projected column vanishes, so the returned ordered index
    sequence may be shorter than k.
    """
    mat = _columns(D)
    x = as_vector(x)
    d, n = mat.shape
    if k > min(d, n):
        raise ValueError(f"k={k} exceeds min(d, n)={min(d, n)}")
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        raise ValueError("zero input")

    col_norms = np.linalg.norm(mat, axis=0)
    basis = np.empty((d, 0))
    selected: list[int] = []
    for _ in range(k):
        # project out the selected span, re-orthogonalizing once for stability
        x_res = x - basis @ (basis.T @ x)
        x_res -= basis @ (basis.T @ x_res)
        x_res_norm = float(np.linalg.norm(x_res))
        if x_res_norm <= _RESIDUAL_TOL * xnorm:
            break
        V = mat - basis @ (basis.T @ mat)
        V -= basis @ (basis.T @ V)
        v_norms = np.linalg.norm(V, axis=0)
        degenerate = v_norms <= _RESIDUAL_TOL * np.maximum(col_norms, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.abs(V.T @ x_res) / (v_norms * x_res_norm)
        scores[degenerate] = -np.inf
        scores[selected] = -np.inf
        if not np.any(np.isfinite(scores)):
            break
        pick = int(np.argmax(scores))
        selected.append(pick)
        new_dir = V[:, pick] / v_norms[pick]
        new_dir -= basis @ (basis.T @ new_dir)
        new_dir /= np.linalg.norm(new_dir)
        basis = np.column_stack([basis, new_dir])
    return np.asarray(selected, dtype=np.int64)


def hard_threshold(v: np.ndarray, lam: float) -> np.ndarray:
    """Keep entries with |v_i| >= lam (boundary included), zero the rest."""
    if lam < 0:
        raise ValueError("negative threshold")
    v = np.asarray(v, dtype=np.float64)
    return np.where(np.abs(v) >= lam, v, 0.0)
