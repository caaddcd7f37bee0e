"""Seeded k-means and per-item diversity costs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .embed import EmbeddingMatrix, to_distance
from .errors import DimMismatch, InvalidK


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    history: tuple = field(default=())
    n_iter: int = 0

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "centroids": self.centroids.tolist(),
                "assignments": [int(a) for a in self.assignments],
                "inertia": self.inertia,
            },
            sort_keys=True,
        )


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = cdist(X, X[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen centroid
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        closest = np.minimum(closest, cdist(X, X[[nxt]], "sqeuclidean")[:, 0])
    return X[chosen].copy()


def _assign(X, centroids):
    d2 = cdist(X, centroids, "sqeuclidean")
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(X)), labels]


def kmeans(E: EmbeddingMatrix, k: int, seed: int = 0, max_iters: int = 300) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding.

    Runs until the assignment stops changing or ``max_iters`` is reached.
    A cluster that loses all its points is reseeded at the point farthest
    from its own centroid. Under the cosine metric clustering happens on
    L2-normalized vectors. ``history`` records the inertia after every
    assignment step and never increases.
    """
    n = len(E)
    if n == 0:
        raise InvalidK("cannot cluster an empty embedding")
    if not 1 <= k <= n:
        raise InvalidK(f"k={k} must lie in [1, {n}]")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    X = E.space()
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(X, k, rng)
    labels, d2 = _assign(X, centroids)
    history = [float(d2.sum())]

    it = 0
    for it in range(1, max_iters + 1):
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
        # recompute distances to the moved centroids before repairing
        d2 = ((X - centroids[labels]) ** 2).sum(axis=1)
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # only take points whose cluster keeps at least one member
            far = int(np.argmax(np.where(counts[labels] > 1, d2, -1.0)))
            counts[labels[far]] -= 1
            centroids[j] = X[far]
            labels[far] = j
            counts[j] = 1
            d2[far] = 0.0
        new_labels, d2 = _assign(X, centroids)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments=labels,
        inertia=history[-1],
        history=tuple(history),
        n_iter=it,
    )


def diversity_costs(E: EmbeddingMatrix, model: ClusterModel) -> np.ndarray:
    """Distance from every item to its nearest centroid, under ``E.metric``."""
    if model.dim != E.dim:
        raise DimMismatch(f"model dim {model.dim} != embedding dim {E.dim}")
    centroids = model.centroids
    if E.metric == "cosine":
        norms = np.linalg.norm(centroids, axis=1, keepdims=True)
        centroids = np.divide(centroids, norms, out=np.zeros_like(centroids), where=norms > 0)
    d = to_distance(E.space(), centroids, E.metric)
    return d.min(axis=1)
