"""Evaluation data: uniform samples, per-feature statistics, k-means background."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "sample_size", "sample_dataset", "kmeans",
           "summarize_background", "dataset_to_csv", "dataset_from_csv"]


@dataclass(frozen=True)
class Dataset:
    """Sample matrix plus the statistics explainers and corrections rely on.

    ``std`` is the population standard deviation (divide by n); quartiles use
    linear interpolation at position ``(n - 1) * q``.
    """

    X: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    q1: np.ndarray
    q3: np.ndarray

    @classmethod
    def from_array(cls, X) -> "Dataset":
        X = np.array(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a non-empty (n, d) matrix")
        X.setflags(write=False)
        q1, q3 = np.quantile(X, [0.25, 0.75], axis=0)
        return cls(X, X.mean(axis=0), X.std(axis=0), q1, q3)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def sample_size(d: int) -> int:
    return math.ceil(500 * math.sqrt(d))


def sample_dataset(d: int, seed: int) -> Dataset:
    """Draw ``ceil(500 sqrt(d))`` rows i.i.d. from U(-1, 1)^d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    n = sample_size(d)
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    # a constant column would make z-scoring undefined; never happens in practice
    while True:
        flat = np.flatnonzero(X.std(axis=0) == 0)
        if flat.size == 0:
            break
        X[:, flat] = rng.uniform(-1.0, 1.0, size=(n, flat.size))
    return Dataset.from_array(X)


def kmeans(X, k: int, seed: int, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd's algorithm seeded with ``k`` distinct random rows.

    Returns ``(centroids, counts, inertia_history)``. ``counts`` are the cluster
    sizes of the assignment that produced the final centroids, so the
    count-weighted centroid mean equals the data mean.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centroids = X[rng.choice(n, size=k, replace=False)].copy()
    x_sq = np.einsum("ij,ij->i", X, X)
    inertia = []
    counts = np.zeros(k, dtype=int)
    for _ in range(max_iter):
        d2 = x_sq[:, None] - 2.0 * X @ centroids.T + np.einsum("ij,ij->i", centroids, centroids)
        labels = np.argmin(d2, axis=1)
        inertia.append(float(np.sum((X - centroids[labels]) ** 2)))
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        new = centroids.copy()
        filled = counts > 0
        # empty clusters keep their previous centroid
        new[filled] = sums[filled] / counts[filled, None]
        shift = np.max(np.linalg.norm(new - centroids, axis=1))
        centroids = new
        if shift <= tol:
            break
    return centroids, counts, inertia


def summarize_background(X, k: int, seed: int) -> np.ndarray:
    """``k`` k-means centroids summarizing ``X``."""
    return kmeans(X, k, seed)[0]


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(f"x{i}" for i in range(data.d)) + "\n")
    for row in data.X:
        buf.write(",".join(format(v, ".17g") for v in row) + "\n")
    return buf.getvalue()


def dataset_from_csv(text: str) -> Dataset:
    lines = text.strip().splitlines()
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    return Dataset.from_array(np.array(rows, dtype=float).reshape(len(rows), -1))
