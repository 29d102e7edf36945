"""Samplers for the sparse generative model and related constructions.

An input is a k-sparse combination x = D* beta of the columns of an
orthonormal ground-truth dictionary D*. Nonzero code magnitudes are uniform
on [gamma, gamma_max]; by default each nonzero also receives a Rademacher
sign so the code entries are zero-mean (set ``signs=False`` to sample the
raw positive magnitudes instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import Dictionary, as_vector

__all__ = [
    "GenerativeParams",
    "SparseCode",
    "Sample",
    "QueryRealization",
    "sample_sparse_code",
    "synthesize_sample",
    "draw_samples",
    "perturb_dictionary",
    "sample_query_realization",
    "build_adversarial_dictionary",
]


@dataclass(frozen=True)
class GenerativeParams:
    """Dimensions and magnitude bounds of the sparse generative model.

    ``sigma2`` is the variance of a nonzero code entry under the
    sign-symmetric uniform magnitude law and is derived at construction:
    (gamma^2 + gamma*gamma_max + gamma_max^2) / 3.
    """

    d: int
    n: int
    k: int
    gamma: float
    gamma_max: float
    sigma2: float = field(init=False)

    def __post_init__(self):
        if not (1 <= self.k <= self.n <= self.d):
            raise ValueError(
                f"need 1 <= k <= n <= d, got k={self.k} n={self.n} d={self.d}"
            )
        if not (0 < self.gamma <= self.gamma_max):
            raise ValueError("need 0 < gamma <= gamma_max")
        s2 = (self.gamma**2 + self.gamma * self.gamma_max + self.gamma_max**2) / 3.0
        object.__setattr__(self, "sigma2", s2)


@dataclass(frozen=True)
class SparseCode:
    """A sparse code: full-length coefficient vector plus its support."""

    beta: np.ndarray
    support: np.ndarray


@dataclass(frozen=True)
class Sample:
    """A synthesized input x = D* beta together with its generating code."""

    x: np.ndarray
    beta: np.ndarray
    support: np.ndarray


@dataclass(frozen=True)
class QueryRealization:
    """One realization of the query noise: z ~ N(0, I), the target
    y = <x, z>, and per-concept responses r = D*^T z."""

    z: np.ndarray
    y: float
    r: np.ndarray


def sample_sparse_code(params: GenerativeParams, seed: int,
                       signs: bool = True) -> SparseCode:
    """Draw a sparse code: support uniform over k-subsets of [n], magnitudes
    uniform on [gamma, gamma_max], and (by default) independent Rademacher
    signs so each entry is zero-mean."""
    rng = np.random.default_rng(seed)
    return _draw_code(params, rng, signs)


def _draw_code(params: GenerativeParams, rng: np.random.Generator,
               signs: bool) -> SparseCode:
    support = np.sort(rng.choice(params.n, size=params.k, replace=False))
    mags = rng.uniform(params.gamma, params.gamma_max, size=params.k)
    if signs:
        mags = mags * (rng.integers(0, 2, size=params.k) * 2 - 1)
    beta = np.zeros(params.n)
    beta[support] = mags
    return SparseCode(beta=beta, support=support.astype(np.int64))


def synthesize_sample(dstar: Dictionary, code: SparseCode) -> Sample:
    """Form the input x = D* beta for a drawn code."""
    if dstar.n != code.beta.shape[0]:
        raise ValueError(
            f"dictionary has {dstar.n} columns but code has length {code.beta.shape[0]}"
        )
    if code.support.size == 0:
        raise ValueError("empty support")
    x = dstar.mat @ code.beta
    return Sample(x=x, beta=code.beta, support=code.support)


def draw_samples(dstar: Dictionary, params: GenerativeParams, m: int,
                 seed: int, signs: bool = True) -> list[Sample]:
    """Draw m i.i.d. samples from one generative instance, all seeded by a
    single stream so the batch is reproducible."""
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    return [synthesize_sample(dstar, _draw_code(params, rng, signs))
            for _ in range(m)]


def perturb_dictionary(dstar: Dictionary, rho: float, seed: int) -> Dictionary:
    """Add an independent volume-uniform rho-ball perturbation to each column.

    Directions are uniform on the sphere and radii follow rho * U^(1/d), so
    each column error is uniform over the solid ball of radius rho; the
    maximum column deviation never exceeds rho.
    """
    if rho < 0:
        raise ValueError("negative radius")
    rng = np.random.default_rng(seed)
    d, n = dstar.d, dstar.n
    dirs = rng.standard_normal((d, n))
    dirs /= np.linalg.norm(dirs, axis=0)
    radii = rho * rng.uniform(0.0, 1.0, size=n) ** (1.0 / d)
    return Dictionary(dstar.mat + dirs * radii)


def sample_query_realization(dstar: Dictionary, x: np.ndarray,
                             seed: int) -> QueryRealization:
    """Draw z ~ N(0, I_d) and evaluate y = <x, z> and r = D*^T z."""
    x = as_vector(x)
    if x.shape[0] != dstar.d:
        raise ValueError("input dimension does not match dictionary")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dstar.d)
    return QueryRealization(z=z, y=float(x @ z), r=dstar.mat.T @ z)


def build_adversarial_dictionary(dstar: Dictionary, k: int,
                                 theta: float) -> Dictionary:
    """Rotate the first k columns pairwise by ``theta`` in their own span.

    Columns i and i + k/2 (for i < k/2) are mixed by a planar rotation; all
    other columns are copied. For odd k the last of the first k columns is
    left in place and only k-1 columns are rotated. The support is assumed
    to be the first k indices; permute columns first for a general support.
    The result stays column-orthogonal whenever the input is, and its
    maximum column deviation from the input is the chord 2*sin(theta/2).
    """
    if not (0 <= theta < math.pi / 2):
        raise ValueError("theta out of range")
    if not (1 <= k <= dstar.n):
        raise ValueError(f"need 1 <= k <= {dstar.n}")
    k_eff = k - (k % 2)
    mat = dstar.mat.copy()
    half = k_eff // 2
    c, s = math.cos(theta), math.sin(theta)
    for i in range(half):
        a = dstar.mat[:, i]
        b = dstar.mat[:, i + half]
        mat[:, i] = c * a + s * b
        mat[:, i + half] = -s * a + c * b
    return Dictionary(mat)
