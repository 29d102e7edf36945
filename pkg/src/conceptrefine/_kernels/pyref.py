"""NumPy reference implementations of the hot kernels.

These are the fallback backend when the compiled extension is unavailable
and the ground truth the compiled kernels are tested against.
"""

from __future__ import annotations

import numpy as np


def topk_supports(scores: np.ndarray, k: int) -> np.ndarray:
    """Row-wise top-k selection with smallest-index tie-breaking.

    Parameters
    ----------
    scores : (m, n) nonnegative selection scores, one row per sample.
    k : number of indices to keep per row.

    Returns
    -------
    (m, k) int64 array; each row holds the selected indices in ascending
    order.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if k > scores.shape[1]:
        raise ValueError("k exceeds number of columns")
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    return np.sort(order, axis=1).astype(np.int64)


def column_grads(R: np.ndarray, B: np.ndarray, supports: np.ndarray,
                 X: np.ndarray) -> np.ndarray:
    """Per-column squared-loss gradients accumulated over activating samples.

    For column i with activating sample set Q_i = {h : i in supports[h]},
    the gradient is the mean over Q_i of 2*(R[h,i] - B[h,i]) * X[h];
    columns with empty Q_i get a zero gradient.

    Parameters
    ----------
    R : (m, n) projections X @ D of the samples onto the current columns.
    B : (m, n) ground-truth sparse codes, one row per sample.
    supports : (m, k) int64 active indices per sample.
    X : (m, d) samples as rows.

    Returns
    -------
    (d, n) gradient matrix.
    """
    R = np.ascontiguousarray(R, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    m, n = R.shape
    mask = np.zeros((m, n))
    np.put_along_axis(mask, supports, 1.0, axis=1)
    counts = mask.sum(axis=0)
    C = (R - B) * mask
    G = 2.0 * (X.T @ C)
    nz = counts > 0
    G[:, nz] /= counts[nz]
    G[:, ~nz] = 0.0
    return G
