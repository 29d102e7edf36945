"""Interpretable classification over precomputed embeddings.

Sparse codes are hard-thresholded projections of a sample onto a bank of
named unit-norm concept embeddings; a linear head maps codes to class
logits. Training descends the softmax cross-entropy in both the head and
(optionally) the bank, with every bank column renormalized and kept inside
a rho-ball around its post-dispersion initialization, so explanations stay
anchored to the original concepts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import Dictionary, as_vector
from .selection import hard_threshold

__all__ = [
    "ConceptBank",
    "EmbeddingDataset",
    "LinearHead",
    "TrainConfig",
    "Metrics",
    "concept_dispersion",
    "normalize_and_project",
    "forward",
    "train",
    "evaluate",
    "explain_sample",
    "cross_entropy",
]

_TINY = 1e-12


@dataclass(frozen=True)
class ConceptBank:
    """Named concept embeddings: the current bank D and the initialization
    snapshot the projection constraint is anchored to."""

    names: list[str]
    D: Dictionary
    dinit: Dictionary

    def __post_init__(self):
        if len(self.names) != self.D.n or self.D.mat.shape != self.dinit.mat.shape:
            raise ValueError("names, bank and initialization must agree in size")

    @classmethod
    def from_embeddings(cls, names: list[str], mat: np.ndarray) -> "ConceptBank":
        """Build a bank from raw concept embeddings, normalizing columns."""
        mat = np.asarray(mat, dtype=np.float64)
        norms = np.linalg.norm(mat, axis=0)
        if np.any(norms < _TINY):
            raise ValueError("zero-norm concept embedding")
        unit = Dictionary(mat / norms, unit_columns=True)
        return cls(names=list(names), D=unit, dinit=unit)

    def disperse(self, r: float) -> "ConceptBank":
        """Apply concept dispersion; the result becomes the new anchor."""
        dispersed = concept_dispersion(self.D, r)
        return ConceptBank(names=self.names, D=dispersed, dinit=dispersed)

    def with_matrix(self, mat: np.ndarray) -> "ConceptBank":
        return ConceptBank(names=self.names,
                           D=Dictionary(mat, unit_columns=True),
                           dinit=self.dinit)


@dataclass(frozen=True)
class EmbeddingDataset:
    """Unit-normalized sample embeddings (rows) with integer class labels."""

    X: np.ndarray
    labels: np.ndarray
    n_classes: int

    @classmethod
    def from_arrays(cls, X: np.ndarray, labels, n_classes: int | None = None,
                    normalize: bool = True) -> "EmbeddingDataset":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        labels = np.asarray(labels, dtype=np.int64)
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if X.shape[0] != labels.shape[0]:
            raise ValueError("one label per sample required")
        if normalize:
            norms = np.linalg.norm(X, axis=1, keepdims=True)
            if np.any(norms < _TINY):
                raise ValueError("zero-norm sample embedding")
            X = X / norms
        if labels.min() < 0:
            raise ValueError("negative label")
        if n_classes is None:
            n_classes = int(labels.max()) + 1
        elif labels.max() >= n_classes:
            raise ValueError("label out of range")
        return cls(X=X, labels=labels, n_classes=n_classes)

    def __len__(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class LinearHead:
    """Class-by-concept weights and per-class bias."""

    W: np.ndarray
    b: np.ndarray

    @classmethod
    def init_random(cls, n_classes: int, n_concepts: int, seed: int) -> "LinearHead":
        rng = np.random.default_rng(seed)
        bound = 1.0 / math.sqrt(n_concepts)
        return cls(W=rng.uniform(-bound, bound, size=(n_classes, n_concepts)),
                   b=rng.uniform(-bound, bound, size=n_classes))


@dataclass(frozen=True)
class TrainConfig:
    eta_d: float
    eta_l: float
    rho: float
    lam: float
    epochs: int
    batch: int = 256
    dispersion_r: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.eta_d < 0 or self.eta_l < 0:
            raise ValueError("learning rates must be nonnegative")
        if self.rho < 0 or self.lam < 0:
            raise ValueError("rho and lambda must be nonnegative")
        if self.epochs < 0 or self.batch < 1:
            raise ValueError("bad epoch or batch count")
        if self.dispersion_r < 1:
            raise ValueError("dispersion factor must be >= 1")


@dataclass(frozen=True)
class Metrics:
    """accuracy; AEL = mean explanation length ||codes||_0; ASR = AEL / n;
    ACED = mean column deviation from the bank's anchor."""

    accuracy: float
    ael: float
    asr: float
    aced: float


def concept_dispersion(D: Dictionary, r: float) -> Dictionary:
    """Scale each column's angle from the bank's mean direction by r.

    A column at angle alpha from the normalized mean embedding moves to
    angle min(r * alpha, pi/2) along the same great circle (columns already
    past the equator are left in place), spreading clustered banks toward
    mutual orthogonality without losing their relative arrangement. Columns
    parallel to the mean have no defined tangent and are kept as-is.
    """
    if r < 1:
        raise ValueError("dispersion factor must be >= 1")
    mat = D.mat
    mean = mat.sum(axis=1)
    mean_norm = float(np.linalg.norm(mean))
    if mean_norm < _TINY:
        raise ValueError("degenerate bank")
    dbar = mean / mean_norm
    out = mat.copy()
    for j in range(mat.shape[1]):
        col = mat[:, j]
        c = float(dbar @ col)
        tang = col - c * dbar
        tn = float(np.linalg.norm(tang))
        if tn < _TINY:
            continue
        alpha = math.acos(max(-1.0, min(1.0, c)))
        target = min(r * alpha, max(alpha, math.pi / 2))
        out[:, j] = math.cos(target) * dbar + math.sin(target) * (tang / tn)
    return Dictionary(out, unit_columns=True)


def normalize_and_project(D, dinit: Dictionary, rho: float) -> Dictionary:
    mat = D.mat if isinstance(D, Dictionary) else np.asarray(D, dtype=np.float64)
    return Dictionary(_normalize_and_project_mat(mat.copy(), dinit.mat, rho),
                      unit_columns=True)


def _normalize_and_project_mat(mat: np.ndarray, init: np.ndarray,
                               rho: float) -> np.ndarray:
    """Unit-normalize every column; columns drifting more than rho from
    their anchor are pulled back to the nearest point of the spherical cap
    {unit u : ||u - anchor|| <= rho}.

    The cap boundary sits at angle psi with chord 2*sin(psi/2) = rho, so the
    replacement rotates the anchor by psi toward the column's tangential
    direction. A column antipodal to its anchor has no tangential direction;
    the lowest-index coordinate axis (orthogonalized against the anchor) is
    used as the deterministic fallback.
    """
    norms = np.linalg.norm(mat, axis=0)
    if np.any(norms < _TINY):
        raise ValueError("zero-norm column")
    # skip columns already unit to the last bit so they are fixed points
    off_unit = np.abs(norms - 1.0) > 32.0 * np.finfo(np.float64).eps
    if np.any(off_unit):
        mat = mat.copy()
        mat[:, off_unit] /= norms[off_unit]
    dists = np.linalg.norm(mat - init, axis=0)
    over = np.flatnonzero(dists > rho)
    if over.size == 0:
        return mat
    psi = 2.0 * math.asin(min(rho / 2.0, 1.0))
    for j in over:
        anchor = init[:, j]
        tang = mat[:, j] - float(anchor @ mat[:, j]) * anchor
        tn = float(np.linalg.norm(tang))
        if tn < _TINY:
            tang = _fallback_tangent(anchor)
            tn = float(np.linalg.norm(tang))
        mat[:, j] = math.cos(psi) * anchor + math.sin(psi) * (tang / tn)
    return mat


def _fallback_tangent(anchor: np.ndarray) -> np.ndarray:
    for j in range(anchor.shape[0]):
        e = np.zeros_like(anchor)
        e[j] = 1.0
        t = e - float(anchor @ e) * anchor
        if np.linalg.norm(t) > _TINY:
            return t
    raise ValueError("no tangent direction")  # unreachable for unit anchors


def forward(bank: ConceptBank, head: LinearHead, x: np.ndarray,
            lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Sparse codes HT_lam(D^T x) and logits W codes + b for one sample."""
    x = as_vector(x)
    codes = hard_threshold(bank.D.mat.T @ x, lam)
    return codes, head.W @ codes + head.b


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(bank: ConceptBank, head: LinearHead, data: EmbeddingDataset,
                  lam: float) -> float:
    """Mean softmax cross-entropy of the current model over a dataset."""
    raw = data.X @ bank.D.mat
    codes = np.where(np.abs(raw) >= lam, raw, 0.0)
    logits = codes @ head.W.T + head.b
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.mean(logp[np.arange(len(data)), data.labels]))


def train(bank: ConceptBank, head: LinearHead, data: EmbeddingDataset,
          cfg: TrainConfig) -> tuple[ConceptBank, LinearHead, list[Metrics]]:
    """Mini-batch gradient descent on the softmax cross-entropy.

    Bank gradients flow only through code entries that survived the
    threshold (zero gradient on thresholded-out entries); after each bank
    update the columns are renormalized and projected back into the
    rho-ball around the post-dispersion anchor. With eta_d = 0 the bank
    code path is skipped entirely, so the run reproduces the frozen-bank
    baseline exactly. Batch order is a deterministic function of the seed.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if data.labels.max() >= head.W.shape[0]:
        raise ValueError("label out of range for head")
    if cfg.dispersion_r > 1:
        bank = bank.disperse(cfg.dispersion_r)
    matD = bank.D.mat.copy()
    init = bank.dinit
    W = head.W.copy()
    b = head.b.copy()
    rng = np.random.default_rng(cfg.seed)
    m = len(data)
    update_bank = cfg.eta_d != 0.0
    update_head = cfg.eta_l != 0.0
    history: list[Metrics] = []

    for _ in range(cfg.epochs):
        perm = rng.permutation(m)
        for start in range(0, m, cfg.batch):
            idx = perm[start:start + cfg.batch]
            Xb = data.X[idx]
            raw = Xb @ matD
            keep = np.abs(raw) >= cfg.lam
            codes = np.where(keep, raw, 0.0)
            logits = codes @ W.T + b
            P = _softmax(logits)
            P[np.arange(idx.size), data.labels[idx]] -= 1.0
            P /= idx.size
            gW = P.T @ codes
            gb = P.sum(axis=0)
            if update_bank:
                gcodes = (P @ W) * keep
                gD = Xb.T @ gcodes
                matD = _normalize_and_project_mat(matD - cfg.eta_d * gD,
                                                  init.mat, cfg.rho)
            if update_head:
                W = W - cfg.eta_l * gW
                b = b - cfg.eta_l * gb
        epoch_bank = ConceptBank(names=bank.names,
                                 D=Dictionary(matD, unit_columns=True),
                                 dinit=init)
        history.append(evaluate(epoch_bank, LinearHead(W=W, b=b), data, cfg.lam))

    out_bank = ConceptBank(names=bank.names,
                           D=Dictionary(matD, unit_columns=True), dinit=init)
    return out_bank, LinearHead(W=W, b=b), history


def evaluate(bank: ConceptBank, head: LinearHead, data: EmbeddingDataset,
             lam: float) -> Metrics:
    """Accuracy (argmax ties resolved toward the smallest class index),
    mean explanation length, sparsity ratio, and mean column deviation."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    raw = data.X @ bank.D.mat
    codes = np.where(np.abs(raw) >= lam, raw, 0.0)
    logits = codes @ head.W.T + head.b
    preds = np.argmax(logits, axis=1)
    acc = float(np.mean(preds == data.labels))
    ael = float(np.mean(np.count_nonzero(codes, axis=1)))
    aced = float(np.mean(np.linalg.norm(bank.D.mat - bank.dinit.mat, axis=0)))
    return Metrics(accuracy=acc, ael=ael, asr=ael / bank.D.n, aced=aced)


def explain_sample(bank: ConceptBank, head: LinearHead, x: np.ndarray,
                   lam: float, top: int) -> list[tuple[str, float, float]]:
    """Top concepts for one sample: (name, code value, head weight for the
    predicted class), sorted by code value descending with index
    tie-breaking; thresholded-out concepts never appear."""
    if top > bank.D.n:
        raise ValueError("top exceeds number of concepts")
    codes, logits = forward(bank, head, x, lam)
    pred = int(np.argmax(logits))
    order = np.argsort(-codes, kind="stable")
    rows = [(bank.names[i], float(codes[i]), float(head.W[pred, i]))
            for i in order if codes[i] != 0.0]
    return rows[:top]
