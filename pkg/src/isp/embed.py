"""Latent item embeddings: a native TF-IDF embedder, a loader for precomputed
vectors, and the distance functions used by clustering and warm-start."""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .catalog import Catalog
from .errors import DimMismatch, EmptyCorpus, MissingItem, ParseError

logger = logging.getLogger(__name__)

METRICS = ("euclidean", "cosine")
_TOKEN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class EmbeddingMatrix:
    item_ids: tuple
    vectors: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DimMismatch(f"expected a 2-D matrix, got shape {vectors.shape}")
        if vectors.shape[0] != len(self.item_ids):
            raise DimMismatch(f"{vectors.shape[0]} rows for {len(self.item_ids)} item ids")
        if vectors.shape[1] < 1:
            raise DimMismatch("embedding dimension must be positive")
        if not np.isfinite(vectors).all():
            raise ValueError("embedding contains NaN or Inf")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "cosine":
            # norms can underflow to zero for tiny nonzero rows
            zero = np.flatnonzero(np.linalg.norm(vectors, axis=1) == 0)
            if zero.size:
                raise ValueError(
                    f"zero-norm vector for item {self.item_ids[zero[0]]!r} under cosine metric"
                )
        vectors.flags.writeable = False
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        object.__setattr__(self, "vectors", vectors)

    def __len__(self):
        return len(self.item_ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def subset(self, indices: Sequence[int]) -> "EmbeddingMatrix":
        idx = list(indices)
        return EmbeddingMatrix(tuple(self.item_ids[i] for i in idx), self.vectors[idx], self.metric)

    def space(self) -> np.ndarray:
        """Vectors in the space where euclidean geometry applies.

        Under the cosine metric rows are L2-normalized, and
        ``cosine(u, v) = 0.5 * ||u/|u| - v/|v|||^2``.
        """
        if self.metric == "cosine":
            return self.vectors / np.linalg.norm(self.vectors, axis=1, keepdims=True)
        return self.vectors


def to_distance(points: np.ndarray, others: np.ndarray, metric: str) -> np.ndarray:
    """Distances between rows of ``points`` and rows of ``others``, both already
    mapped through :meth:`EmbeddingMatrix.space`."""
    if metric == "cosine":
        return 0.5 * cdist(points, others, "sqeuclidean")
    return cdist(points, others, "euclidean")


def distance_matrix(E: EmbeddingMatrix, rows=None, cols=None) -> np.ndarray:
    X = E.space()
    A = X if rows is None else X[list(rows)]
    B = X if cols is None else X[list(cols)]
    return to_distance(A, B, E.metric)


def pairwise_distance(E: EmbeddingMatrix, i: int, j: int) -> float:
    n = len(E)
    if not (-n <= i < n and -n <= j < n):
        raise IndexError(f"item index out of range for {n} items")
    if i % n == j % n:
        return 0.0
    return float(distance_matrix(E, [i], [j])[0, 0])


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def tfidf_embed(
    catalog: Catalog,
    vocab_size: int = 1000,
    normalize: bool = True,
    metric: str = "euclidean",
) -> EmbeddingMatrix:
    """TF-IDF vectors over item texts.

    Tokens are lowercase alphanumeric runs. The vocabulary keeps the
    ``vocab_size`` terms with highest document frequency (ties broken
    lexicographically), in that order. Weights are raw term count times
    ``ln(N / (1 + df)) + 1``; rows are L2-normalized when ``normalize``.
    Items without text get a zero row.
    """
    if vocab_size < 1:
        raise ValueError("vocab_size must be positive")
    docs = [tokenize(item.text or "") for item in catalog.items]
    if not any(docs):
        raise EmptyCorpus("no item has text to embed")
    empty = [item.id for item, d in zip(catalog.items, docs) if not d]
    if empty:
        logger.warning("%d items have no text and get a zero vector (first: %s)", len(empty), empty[0])

    n_docs = len(docs)
    df = Counter(term for d in docs for term in set(d))
    vocab = sorted(df, key=lambda term: (-df[term], term))[:vocab_size]
    col = {term: j for j, term in enumerate(vocab)}
    idf = np.array([math.log(n_docs / (1 + df[t])) + 1.0 for t in vocab])

    tf = np.zeros((n_docs, len(vocab)))
    for i, d in enumerate(docs):
        for term, count in Counter(d).items():
            j = col.get(term)
            if j is not None:
                tf[i, j] = count
    vectors = tf * idf
    if normalize:
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        vectors = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)
    return EmbeddingMatrix(tuple(catalog.ids), vectors, metric)


def load_embeddings(path, catalog: Catalog, metric: str | None = None) -> EmbeddingMatrix:
    """Read precomputed vectors and align them to catalog order.

    The file starts with a header ``dim=<d> metric=<m>`` followed by one
    ``id v1 ... vd`` line per item. Ids not in the catalog are ignored. An
    explicit ``metric`` overrides the header.
    """
    path = Path(path)
    rows: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        meta = {}
        for tok in header:
            key, sep, val = tok.partition("=")
            if not sep:
                raise ParseError(f"bad header token {tok!r}", line=1)
            meta[key] = val
        try:
            dim = int(meta["dim"])
        except (KeyError, ValueError):
            raise ParseError("header must declare dim=<d>", line=1) from None
        file_metric = meta.get("metric", "euclidean")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            item_id, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimMismatch(f"line {lineno}: {item_id} has {len(values)} values, expected {dim}")
            if item_id in rows:
                raise ParseError(f"duplicate id {item_id!r}", line=lineno)
            try:
                rows[item_id] = np.array([float(v) for v in values])
            except ValueError:
                raise ParseError(f"non-numeric value for {item_id!r}", line=lineno) from None
    for item_id in catalog.ids:
        if item_id not in rows:
            raise MissingItem(item_id)
    vectors = np.vstack([rows[i] for i in catalog.ids]) if len(catalog) else np.zeros((0, dim))
    return EmbeddingMatrix(tuple(catalog.ids), vectors, metric or file_metric)


def write_embeddings(E: EmbeddingMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={E.dim} metric={E.metric}\n")
        for item_id, row in zip(E.item_ids, E.vectors):
            fh.write(item_id + " " + " ".join(repr(float(v)) for v in row) + "\n")
