"""Warm-starting cold items from their nearest warm neighbour in embedding space.

A cold item may borrow from a warm donor only when their distance is at
most ``w``, the ``q``-quantile of the pairwise item distances.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .catalog import IncidenceMatrix
from .embed import EmbeddingMatrix, distance_matrix
from .errors import EmptyWarmSet, InvalidQuantile, UnknownItem

SAMPLE_CAP = 1_000_000


@dataclass(frozen=True)
class WarmStartMap:
    q: float
    w: float
    warm: tuple
    assignments: dict
    unmatched: tuple

    @property
    def matched(self) -> tuple:
        return tuple(self.assignments)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "w": self.w,
            "warm": list(self.warm),
            "assignments": {
                cold: {"donor": donor, "distance": dist}
                for cold, (donor, dist) in self.assignments.items()
            },
            "unmatched": list(self.unmatched),
            "n_matched": len(self.assignments),
            "n_unmatched": len(self.unmatched),
        }


def pair_distances(E: EmbeddingMatrix, sample_cap: int = SAMPLE_CAP, seed: int = 0) -> np.ndarray:
    """Distances over all unordered item pairs, or a seeded uniform sample of
    ``sample_cap`` pairs when there are more pairs than that."""
    n = len(E)
    n_pairs = n * (n - 1) // 2
    if n_pairs <= sample_cap:
        iu = np.triu_indices(n, k=1)
        return distance_matrix(E)[iu]
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=sample_cap)
    j = rng.integers(0, n - 1, size=sample_cap)
    j = j + (j >= i)
    X = E.space()
    out = np.empty(sample_cap)
    step = 65536
    for s in range(0, sample_cap, step):
        diff = X[i[s:s + step]] - X[j[s:s + step]]
        sq = np.einsum("ij,ij->i", diff, diff)
        out[s:s + step] = 0.5 * sq if E.metric == "cosine" else np.sqrt(sq)
    return out


def resolve_threshold(E: EmbeddingMatrix, q: float, sample_cap: int = SAMPLE_CAP, seed: int = 0) -> float:
    """Empirical ``q``-quantile (linear interpolation) of pairwise item distances."""
    if not 0 < q <= 1:
        raise InvalidQuantile(f"q={q} must lie in (0, 1]")
    d = pair_distances(E, sample_cap, seed)
    if d.size == 0:
        return 0.0
    return float(np.quantile(d, q, method="linear"))


def _indices(E: EmbeddingMatrix, ids: Iterable[str]) -> list[int]:
    pos = {item_id: i for i, item_id in enumerate(E.item_ids)}
    try:
        return sorted(pos[i] for i in set(ids))
    except KeyError as exc:
        raise UnknownItem(exc.args[0]) from None


def warm_start(warm: Iterable[str], cold: Iterable[str], E: EmbeddingMatrix, q: float,
               sample_cap: int = SAMPLE_CAP, seed: int = 0, w: float | None = None) -> WarmStartMap:
    """Assign every cold item its nearest warm item when that distance is within ``w``.

    ``w`` defaults to :func:`resolve_threshold` at quantile ``q``. Equidistant
    donors resolve to the one earlier in embedding order.
    """
    warm_idx = _indices(E, warm)
    cold_idx = _indices(E, cold)
    if not warm_idx:
        raise EmptyWarmSet("warm set is empty")
    if set(warm_idx) & set(cold_idx):
        raise ValueError("warm and cold sets overlap")
    if w is None:
        w = resolve_threshold(E, q, sample_cap, seed)
    elif not 0 < q <= 1:
        raise InvalidQuantile(f"q={q} must lie in (0, 1]")

    assignments = {}
    unmatched = []
    if cold_idx:
        d = distance_matrix(E, cold_idx, warm_idx)
        nearest = np.argmin(d, axis=1)
        for row, c in enumerate(cold_idx):
            dist = float(d[row, nearest[row]])
            if dist <= w:
                assignments[E.item_ids[c]] = (E.item_ids[warm_idx[nearest[row]]], dist)
            else:
                unmatched.append(E.item_ids[c])
    return WarmStartMap(
        q=float(q),
        w=float(w),
        warm=tuple(E.item_ids[i] for i in warm_idx),
        assignments=assignments,
        unmatched=tuple(unmatched),
    )


def warm_union(warm_map: WarmStartMap) -> list[str]:
    """Warm items together with every cold item they warm-start."""
    return list(warm_map.warm) + list(warm_map.assignments)


def unit_coverage(selection_size: int, warm_map: WarmStartMap, incidence: IncidenceMatrix) -> float:
    """Label rows covered by warm plus warm-started items, per selected item."""
    if selection_size < 1:
        raise ValueError("selection_size must be at least 1")
    covered = incidence.covered_mask(incidence.columns(warm_union(warm_map)))
    return int(covered.sum()) / selection_size
