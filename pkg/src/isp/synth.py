"""Synthetic catalogs and embeddings with known structure."""
from __future__ import annotations

import numpy as np

from .catalog import Catalog, Item, Label
from .embed import EmbeddingMatrix


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** exponent
    return w / w.sum()


def zipf_catalog(
    n_items: int = 1000,
    seed: int = 0,
    n_genres: int = 24,
    n_languages: int = 12,
    n_producers: int = 60,
    exponent: float = 1.2,
    max_genres: int = 3,
    label_words: int = 4,
    plot_words: int = 24,
    plot_vocab: int = 4000,
) -> Catalog:
    """Movie-like catalog whose label frequencies follow Zipf laws.

    Categories are ``genre`` (one to ``max_genres`` per item), ``language``
    and ``producer`` (one each). Each item's text has ``label_words`` words
    tied to each of its labels plus ``plot_words`` words drawn (Zipf) from a
    large shared vocabulary, standing in for a free-text synopsis.
    """
    rng = np.random.default_rng(seed)
    pg = _zipf_weights(n_genres, exponent)
    pl = _zipf_weights(n_languages, exponent)
    pp = _zipf_weights(n_producers, exponent)
    pv = _zipf_weights(plot_vocab, 1.0)

    def topic_words(prefix, j):
        return [f"{prefix}{j}w{x}" for x in range(6)]

    items = []
    for i in range(n_items):
        n_g = int(rng.integers(1, max_genres + 1))
        genres = rng.choice(n_genres, size=n_g, replace=False, p=pg)
        lang = int(rng.choice(n_languages, p=pl))
        prod = int(rng.choice(n_producers, p=pp))
        labels = {Label("genre", f"g{g:02d}") for g in genres}
        labels.add(Label("language", f"l{lang:02d}"))
        labels.add(Label("producer", f"p{prod:02d}"))
        words = []
        for prefix, j in [("g", int(g)) for g in genres] + [("l", lang), ("p", prod)]:
            words.extend(rng.choice(topic_words(prefix, j), size=label_words))
        words.extend(f"w{int(v)}" for v in rng.choice(plot_vocab, size=plot_words, p=pv))
        rng.shuffle(words)
        items.append(Item(f"m{i:04d}", frozenset(labels), " ".join(words)))
    return Catalog(tuple(items), ("genre", "language", "producer"))


def blobs(centers, n_per: int, spread: float, seed: int = 0) -> np.ndarray:
    """Isotropic gaussian points around each center, blob after blob."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    return np.vstack([c + spread * rng.standard_normal((n_per, centers.shape[1])) for c in centers])


def clustered_fixture(
    seed: int = 0,
    big_clusters: int = 2,
    big_size: int = 60,
    small_clusters: int = 16,
    small_size: int = 5,
    dim: int = 8,
    n_formats: int = 3,
) -> tuple[Catalog, EmbeddingMatrix]:
    """Items in a few large loose clusters and many small tight ones.

    Every item carries a ``topic`` label naming its cluster and a random
    ``format`` label. Cluster centres sit far apart, so the pairwise
    distance quantiles that matter fall inside clusters. Any label cover
    contains an item from every cluster.
    """
    rng = np.random.default_rng(seed)
    n_clusters = big_clusters + small_clusters
    centers = rng.standard_normal((n_clusters, dim))
    centers *= 20.0 / np.linalg.norm(centers, axis=1, keepdims=True)
    centers += np.arange(n_clusters)[:, None] * 3.0
    vectors = []
    topics = []
    for c in range(n_clusters):
        size, spread = (big_size, 1.0) if c < big_clusters else (small_size, 0.15)
        vectors.append(centers[c] + spread * rng.standard_normal((size, dim)))
        topics.extend([c] * size)
    vectors = np.vstack(vectors)
    order = rng.permutation(len(topics))
    items = []
    for i, src in enumerate(order):
        labels = frozenset({
            Label("topic", f"t{topics[src]:02d}"),
            Label("format", f"f{int(rng.integers(n_formats))}"),
        })
        items.append(Item(f"c{i:03d}", labels, None))
    catalog = Catalog(tuple(items), ("topic", "format"))
    return catalog, EmbeddingMatrix(tuple(catalog.ids), vectors[order], "euclidean")
