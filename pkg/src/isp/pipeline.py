"""Multi-level item selection: smallest cover, diverse cover, bounded coverage.

Level 1 finds the size ``k`` of a smallest label cover. Level 2 clusters the
embedding into ``k`` groups, prices each item by its distance to the nearest
centroid and solves the cheapest cover. Level 3 keeps at most ``t`` items of
the diverse cover with maximal label coverage.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .catalog import Catalog, IncidenceMatrix, build_incidence
from .clustering import ClusterModel, diversity_costs, kmeans
from .embed import EmbeddingMatrix
from .errors import InfeasibleCatalog, InvalidSize
from .setcover import (
    CoverInstance,
    Selection,
    _popcount,
    _union,
    solve_max_cover,
    solve_unicost,
    solve_weighted,
)

logger = logging.getLogger(__name__)

DIVERSITY_MODES = ("cardinality_bound", "warm_start")


@dataclass(frozen=True)
class IspConfig:
    t: int | None = None
    seed: int = 0
    backend: str = "auto"
    unicost_backend: str | None = None
    weighted_backend: str | None = None
    max_cover_backend: str | None = None
    metric: str | None = None
    diversity_mode: str = "cardinality_bound"
    time_budget: float | None = 30.0
    max_iters: int = 300
    categories: tuple | None = None
    pair_categories: tuple = ()
    strict: bool = False
    # side-constraint preferences: item id -> multiplier on its diversity cost
    cost_multipliers: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.t is not None and self.t < 1:
            raise ValueError("t must be at least 1")
        if self.diversity_mode not in DIVERSITY_MODES:
            raise ValueError(f"unknown diversity_mode {self.diversity_mode!r}")

    def level_backend(self, level: str) -> str:
        return getattr(self, f"{level}_backend") or self.backend


@dataclass(frozen=True)
class CoverageReport:
    per_category: dict
    covered: int
    total: int
    uncoverable: tuple = ()

    @property
    def overall(self) -> float:
        return self.covered / self.total if self.total else 1.0

    def fraction(self, category: str) -> float:
        covered, total = self.per_category[category]
        return covered / total if total else 1.0

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "covered": self.covered,
            "total": self.total,
            "per_category": {
                cat: {"covered": c, "total": t, "fraction": c / t if t else 1.0}
                for cat, (c, t) in sorted(self.per_category.items())
            },
            "uncoverable": list(self.uncoverable),
        }


def _ids_of(selection) -> list[str]:
    return list(selection.item_ids) if isinstance(selection, Selection) else list(selection)


def coverage_mask(selection, incidence: IncidenceMatrix) -> np.ndarray:
    return incidence.covered_mask(incidence.columns(_ids_of(selection)))


def coverage(selection, incidence: IncidenceMatrix) -> CoverageReport:
    """Fraction of (coverable) label rows hit by the union of the selected items,
    overall and per category. Composite pair labels form their own category."""
    covered = coverage_mask(selection, incidence)
    per: dict[str, list[int]] = {}
    for lab, hit in zip(incidence.labels, covered):
        slot = per.setdefault(lab.category, [0, 0])
        slot[0] += int(hit)
        slot[1] += 1
    return CoverageReport(
        per_category={k: tuple(v) for k, v in per.items()},
        covered=int(covered.sum()),
        total=incidence.n_rows,
        uncoverable=tuple(str(lab) for lab in incidence.uncoverable),
    )


@dataclass(frozen=True)
class IspResult:
    unicost: Selection
    diverse: Selection
    final: Selection
    k: int
    costs: np.ndarray
    coverage_report: CoverageReport
    clusters: ClusterModel | None = None
    incidence: IncidenceMatrix | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        inc = self.incidence
        levels = {}
        for name in ("unicost", "diverse", "final"):
            sel = getattr(self, name)
            levels[name] = sel.to_dict()
            if inc is not None:
                levels[name]["coverage"] = coverage(sel, inc).to_dict()
        return {
            "k": self.k,
            "selections": levels,
            "coverage": self.coverage_report.to_dict(),
            "costs": {i: float(c) for i, c in zip(inc.item_ids, self.costs)} if inc is not None else None,
        }


def _check_aligned(catalog: Catalog, E: EmbeddingMatrix) -> None:
    if tuple(E.item_ids) != tuple(catalog.ids):
        raise ValueError("embedding rows are not aligned with catalog order")


def solve_isp(catalog: Catalog, E: EmbeddingMatrix, config: IspConfig = IspConfig(),
              incidence: IncidenceMatrix | None = None) -> IspResult:
    _check_aligned(catalog, E)
    if config.metric is not None and config.metric != E.metric:
        E = EmbeddingMatrix(E.item_ids, E.vectors, config.metric)
    if incidence is None:
        incidence = build_incidence(catalog, config.categories, config.pair_categories)
    elif tuple(incidence.item_ids) != tuple(catalog.ids):
        raise ValueError("incidence columns are not aligned with catalog order")
    if incidence.uncoverable and config.strict:
        raise InfeasibleCatalog(
            f"{len(incidence.uncoverable)} labels cannot be covered, e.g. {incidence.uncoverable[0]}"
        )

    unicost = solve_unicost(CoverInstance(incidence), config.level_backend("unicost"), config.time_budget)
    k = len(unicost)
    logger.info("level 1: unicost cover of %d items (optimal=%s)", k, unicost.optimal)

    if k == 0:
        empty = unicost
        return IspResult(empty, empty, empty, 0, np.zeros(len(catalog)),
                         coverage(empty, incidence), None, incidence)

    model = kmeans(E, k, seed=config.seed, max_iters=config.max_iters)
    costs = diversity_costs(E, model)
    if config.cost_multipliers:
        mult = np.array([config.cost_multipliers.get(i, 1.0) for i in catalog.ids])
        if (mult < 0).any():
            raise ValueError("cost multipliers must be non-negative")
        costs = costs * mult
    bound = k if config.diversity_mode == "cardinality_bound" else None
    diverse = solve_weighted(
        CoverInstance(incidence, costs=costs, max_size=bound),
        config.level_backend("weighted"),
        config.time_budget,
        incumbent=unicost.columns,
    )
    logger.info("level 2: diverse cover of %d items, cost %.6g", len(diverse), diverse.objective)

    if config.t is None or config.t >= len(diverse):
        final = replace(diverse, objective=float(diverse.covered_rows), optimal=True)
    else:
        final = solve_max_cover(
            CoverInstance(incidence, candidate_columns=diverse.columns),
            config.t,
            config.level_backend("max_cover"),
            config.time_budget,
        )
    logger.info("level 3: %d items covering %d of %d labels", len(final), final.covered_rows, incidence.n_rows)
    return IspResult(unicost, diverse, final, k, costs, coverage(final, incidence), model, incidence)


def _selection_from_indices(catalog: Catalog, indices: Sequence[int],
                            incidence: IncidenceMatrix | None) -> Selection:
    ids = tuple(catalog.items[i].id for i in indices)
    covered = None
    cols = tuple(int(i) for i in indices)
    if incidence is not None:
        cols = tuple(incidence.columns(ids))
        covered = _popcount(_union(incidence.column_masks, cols))
    return Selection(ids, cols, float(len(ids)), covered)


def _check_size(catalog: Catalog, size: int) -> None:
    if not 1 <= size <= len(catalog):
        raise InvalidSize(f"size {size} must lie in [1, {len(catalog)}]")


def baseline_random(catalog: Catalog, size: int, seed: int = 0,
                    incidence: IncidenceMatrix | None = None) -> Selection:
    """Uniform sample of ``size`` items without replacement."""
    _check_size(catalog, size)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(catalog), size=size, replace=False)
    return _selection_from_indices(catalog, [int(i) for i in picks], incidence)


def baseline_kmeans(catalog: Catalog, E: EmbeddingMatrix, size: int, seed: int = 0,
                    incidence: IncidenceMatrix | None = None, max_iters: int = 300) -> Selection:
    """Cluster into ``size`` groups and take the item nearest each centroid.

    Centroids are visited in order; an item already taken by an earlier
    centroid is skipped in favour of the next nearest one.
    """
    _check_size(catalog, size)
    _check_aligned(catalog, E)
    model = kmeans(E, size, seed=seed, max_iters=max_iters)
    X = E.space()
    d2 = cdist(X, model.centroids, "sqeuclidean")
    taken: list[int] = []
    used = np.zeros(len(catalog), dtype=bool)
    for j in range(size):
        col = np.where(used, np.inf, d2[:, j])
        i = int(np.argmin(col))
        used[i] = True
        taken.append(i)
    return _selection_from_indices(catalog, taken, incidence)
