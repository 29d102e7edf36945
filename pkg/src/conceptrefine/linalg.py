"""Shared vector/matrix primitives: validation, column norms, random
orthonormal dictionaries, and Euclidean ball projection.

All arrays are float64 throughout; every random draw is driven by an
explicit integer seed (no global RNG state).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dictionary",
    "as_vector",
    "as_matrix",
    "column_norm_max",
    "random_orthonormal",
    "project_to_ball",
]

UNIT_NORM_TOL = 1e-9


def as_vector(v) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    out = np.asarray(v, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries in vector")
    return out


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries in matrix")
    return out


@dataclass(frozen=True)
class Dictionary:
    """A d x n matrix whose columns are concept embeddings.

    The backing array is copied on construction and marked read-only, so a
    Dictionary is an immutable value; refinement steps produce new instances.
    With ``unit_columns=True`` every column must have unit l2 norm within
    ``UNIT_NORM_TOL``.
    """

    mat: np.ndarray
    unit_columns: bool = field(default=False, compare=False)

    def __post_init__(self):
        m = as_matrix(self.mat).copy()
        if m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("dictionary must have at least one row and column")
        if self.unit_columns:
            norms = np.linalg.norm(m, axis=0)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                raise ValueError("columns are not unit norm")
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    @property
    def d(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return self.mat.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.mat[:, i]


def _columns(a) -> np.ndarray:
    """Accept a Dictionary or a 2-D array and return the backing matrix."""
    if isinstance(a, Dictionary):
        return a.mat
    return as_matrix(a)


def column_norm_max(a) -> float:
    """Maximum column-wise l2 norm of a matrix (largest column length)."""
    m = _columns(a)
    if m.size == 0:
        raise ValueError("empty input")
    return float(np.linalg.norm(m, axis=0).max())


def random_orthonormal(d: int, n: int, seed: int) -> Dictionary:
    """Draw a uniformly random d x n matrix with orthonormal columns.

    Fills the matrix with seeded i.i.d. standard normals and orthonormalizes
    with a QR factorization; column signs are fixed so the diagonal of R is
    positive, which makes the output a deterministic function of the seed.
    """
    if n > d:
        raise ValueError(f"cannot orthonormalize {n} columns in dimension {d}")
    if d < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, n))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return Dictionary(q * signs, unit_columns=True)


def project_to_ball(v: np.ndarray, center: np.ndarray, rho: float) -> np.ndarray:
    """Nearest point to ``v`` in the closed l2 ball of radius ``rho`` around
    ``center``: ``v`` itself when inside, else the radial contraction onto
    the sphere."""
    if rho < 0:
        raise ValueError("negative radius")
    v = as_vector(v)
    center = as_vector(center)
    if v.shape != center.shape:
        raise ValueError("vector and center dimensions differ")
    diff = v - center
    dist = float(np.linalg.norm(diff))
    # a few ulps of slack make repeated projection an exact fixed point
    if dist <= rho or dist - rho <= 32.0 * np.finfo(np.float64).eps * rho:
        return v
    return center + diff * (rho / dist)
