"""CSV formats for matrices, trajectories, concept banks and embeddings.

Floats are written with 17 significant digits so every file round-trips to
the exact in-memory float64 values; all files use '\\n' line endings and
'.' decimals regardless of locale.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .optimizer import StepRecord

__all__ = [
    "fmt",
    "save_matrix",
    "load_matrix",
    "save_trajectory",
    "load_trajectory",
    "save_concepts",
    "load_concepts",
    "save_embeddings",
    "load_embeddings",
    "save_explanation",
]

TRAJECTORY_HEADER = "iter,loss,dev_all,dev_active,contraction"


def fmt(x: float) -> str:
    """Shortest exact decimal form used everywhere: 17 significant digits."""
    return "%.17g" % x


def save_matrix(path, a: np.ndarray) -> None:
    """Plain CSV, no header, one line per matrix row."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in a:
            f.write(",".join(fmt(v) for v in row))
            f.write("\n")


def load_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def save_trajectory(path, records: list[StepRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for r in records:
            f.write(f"{r.iter},{fmt(r.loss)},{fmt(r.dev_all)},"
                    f"{fmt(r.dev_active)},{fmt(r.contraction)}\n")


def load_trajectory(path) -> list[StepRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header: {header!r}")
        for line in f:
            it, loss, dev_all, dev_active, contraction = line.strip().split(",")
            records.append(StepRecord(
                iter=int(it),
                loss=float(loss),
                dev_all=float(dev_all),
                dev_active=float(dev_active),
                contraction=float(contraction),
            ))
    return records


def records_equal(a: StepRecord, b: StepRecord) -> bool:
    """Field-wise equality that treats NaN contraction entries as equal."""
    same_contraction = (a.contraction == b.contraction or
                        (math.isnan(a.contraction) and math.isnan(b.contraction)))
    return (a.iter == b.iter and a.loss == b.loss and a.dev_all == b.dev_all
            and a.dev_active == b.dev_active and same_contraction)


def save_concepts(path, names: list[str], mat: np.ndarray) -> None:
    """Concept bank CSV: header name,v0,...,v{d-1}; one concept per row.

    Concepts are the columns of ``mat``; row i of the file holds column i.
    """
    mat = np.asarray(mat, dtype=np.float64)
    d, n = mat.shape
    if len(names) != n:
        raise ValueError("one name per concept column required")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name"] + [f"v{j}" for j in range(d)])
        for i in range(n):
            w.writerow([names[i]] + [fmt(v) for v in mat[:, i]])


def load_concepts(path) -> tuple[list[str], np.ndarray]:
    names, rows = [], []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for rec in reader:
            if not rec:
                continue
            names.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    if not rows:
        raise ValueError("no concepts in file")
    return names, np.asarray(rows, dtype=np.float64).T


def save_embeddings(path, X: np.ndarray, labels) -> None:
    """Labeled embedding CSV: header label,v0,...,v{d-1}; one sample per row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray(labels)
    if X.shape[0] != labels.shape[0]:
        raise ValueError("one label per sample row required")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("label," + ",".join(f"v{j}" for j in range(X.shape[1])) + "\n")
        for lab, row in zip(labels, X):
            f.write(str(int(lab)) + "," + ",".join(fmt(v) for v in row) + "\n")


def load_embeddings(path) -> tuple[np.ndarray, np.ndarray]:
    labels, rows = [], []
    with open(path, encoding="utf-8") as f:
        next(f)
        for line in f:
            parts = line.strip().split(",")
            if len(parts) < 2:
                continue
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise ValueError("no samples in file")
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.int64)


def save_explanation(path, rows: list[tuple[str, float, float]]) -> None:
    """Explanation CSV: header rank,concept,score,weight."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rank", "concept", "score", "weight"])
        for rank, (name, score, weight) in enumerate(rows, start=1):
            w.writerow([rank, name, fmt(score), fmt(weight)])
