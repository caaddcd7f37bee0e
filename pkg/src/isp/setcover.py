"""Covering formulations over an incidence matrix.

Three problems are solved here:

* unicost set cover: fewest columns covering every row;
* weighted set cover: cheapest cover under per-column costs, optionally
  limited to at most ``max_size`` columns;
* max-cover@t: at most ``t`` columns covering as many rows as possible.

Each has a greedy backend and an exact branch-and-bound backend. Ties are
always broken towards the lower column index so results are reproducible.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import IncidenceMatrix, Label
from .errors import Infeasible

EXACT_CELL_LIMIT = 5000
_EPS = 1e-9


@dataclass(frozen=True)
class CoverInstance:
    incidence: IncidenceMatrix
    costs: np.ndarray | None = None
    candidate_columns: tuple | None = None
    max_size: int | None = None

    def __post_init__(self):
        if self.costs is not None:
            costs = np.asarray(self.costs, dtype=np.float64)
            if costs.shape != (self.incidence.n_cols,):
                raise ValueError(f"{costs.size} costs for {self.incidence.n_cols} columns")
            if (costs < 0).any() or not np.isfinite(costs).all():
                raise ValueError("costs must be finite and non-negative")
            object.__setattr__(self, "costs", costs)
        if self.candidate_columns is not None:
            cand = tuple(sorted(set(int(c) for c in self.candidate_columns)))
            if not cand:
                raise ValueError("candidate_columns must be non-empty when given")
            if cand[0] < 0 or cand[-1] >= self.incidence.n_cols:
                raise IndexError("candidate column out of range")
            object.__setattr__(self, "candidate_columns", cand)
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be at least 1")

    @property
    def candidates(self) -> tuple:
        if self.candidate_columns is None:
            return tuple(range(self.incidence.n_cols))
        return self.candidate_columns

    @property
    def n_cells(self) -> int:
        return self.incidence.n_rows * len(self.candidates)

    def cost_of(self, columns) -> float:
        if self.costs is None:
            return float(len(columns))
        return float(sum(self.costs[c] for c in columns))


@dataclass(frozen=True)
class Selection:
    item_ids: tuple
    columns: tuple
    objective: float
    covered_rows: int | None
    optimal: bool = False
    round: int | None = None
    per_item_weight: tuple | None = None

    def __post_init__(self):
        if len(set(self.item_ids)) != len(self.item_ids):
            raise ValueError("selection contains duplicate item ids")

    def __len__(self):
        return len(self.item_ids)

    def to_dict(self) -> dict:
        out = {
            "item_ids": list(self.item_ids),
            "objective": self.objective,
            "covered_rows": self.covered_rows,
            "optimal": self.optimal,
        }
        if self.round is not None:
            out["round"] = self.round
        if self.per_item_weight is not None:
            out["per_item_weight"] = list(self.per_item_weight)
        return out


def harmonic(d: int) -> float:
    return sum(1.0 / i for i in range(1, d + 1))


def resolve_backend(backend: str, instance: CoverInstance) -> str:
    if backend == "auto":
        return "exact" if instance.n_cells <= EXACT_CELL_LIMIT else "greedy"
    if backend not in ("greedy", "exact"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def _popcount(x: int) -> int:
    return x.bit_count()


def _union(masks, columns) -> int:
    m = 0
    for c in columns:
        m |= masks[c]
    return m


def _make_selection(instance: CoverInstance, columns, objective, optimal) -> Selection:
    columns = tuple(int(c) for c in columns)
    inc = instance.incidence
    covered = _popcount(_union(inc.column_masks, columns))
    return Selection(
        item_ids=tuple(inc.item_ids[c] for c in columns),
        columns=columns,
        objective=float(objective),
        covered_rows=covered,
        optimal=optimal,
    )


def _check_coverable(instance: CoverInstance) -> None:
    inc = instance.incidence
    reach = _union(inc.column_masks, instance.candidates)
    missing = inc.full_mask & ~reach
    if missing:
        r = (missing & -missing).bit_length() - 1
        raise Infeasible(f"row {inc.labels[r]} is not covered by any candidate column")


def greedy_cover(instance: CoverInstance) -> list[int]:
    """Chvátal's greedy rule.

    Unicost: take the column covering most uncovered rows. Weighted: take
    the column minimizing cost per newly covered row, then lower cost.
    Ties go to the lower column index.
    """
    _check_coverable(instance)
    masks = instance.incidence.column_masks
    costs = instance.costs
    uncovered = instance.incidence.full_mask
    chosen: list[int] = []
    remaining = list(instance.candidates)
    while uncovered:
        best, best_key = None, None
        for j in remaining:
            new = _popcount(masks[j] & uncovered)
            if new == 0:
                continue
            key = (-new,) if costs is None else (costs[j] / new, costs[j])
            if best_key is None or key < best_key:
                best, best_key = j, key
        chosen.append(best)
        remaining.remove(best)
        uncovered &= ~masks[best]
    return chosen


def _local_improve(instance: CoverInstance, columns: list[int]) -> list[int]:
    """Drop redundant columns and apply cost-reducing single swaps until stable."""
    cover = instance.incidence.cover
    costs = instance.costs if instance.costs is not None else np.ones(instance.incidence.n_cols)
    cand = np.array(instance.candidates)
    sel = list(columns)
    changed = True
    while changed:
        changed = False
        for j in sorted(sel, key=lambda c: (-costs[c], c)):
            rest = [c for c in sel if c != j]
            if instance.incidence.covered_mask(rest).all():
                sel = rest
                changed = True
        for j in sorted(sel, key=lambda c: (-costs[c], c)):
            rest = [c for c in sel if c != j]
            need = ~instance.incidence.covered_mask(rest)
            ok = cover[need][:, cand].all(axis=0)
            cheaper = ok & (costs[cand] < costs[j] - _EPS) & ~np.isin(cand, sel)
            if cheaper.any():
                options = cand[cheaper]
                swap = int(options[np.lexsort((options, costs[options]))[0]])
                sel = [swap if c == j else c for c in sel]
                changed = True
                break
    return sel


class _Timeout(Exception):
    pass


def _reduce(A: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of the columns and rows worth keeping.

    A column is dropped when another column covers a superset of its rows
    at no higher cost (exact duplicates keep the lower index). A row is
    dropped when every column covering some other row also covers it.
    """
    n_cols = A.shape[1]
    Ai = A.astype(np.int32)
    # sub[i, j]: column i's rows are a subset of column j's rows
    sub = (Ai.T @ (1 - Ai)) == 0
    same = sub & sub.T
    cheaper = c[None, :] < c[:, None] - _EPS
    equal_cost = np.abs(c[None, :] - c[:, None]) <= _EPS
    idx = np.arange(n_cols)
    dominated_by = sub & (cheaper | (equal_cost & (~same | (idx[None, :] < idx[:, None]))))
    np.fill_diagonal(dominated_by, False)
    keep_cols = ~dominated_by.any(axis=1) & A.any(axis=0)

    R = A[:, keep_cols].astype(np.int32)
    rsub = (R @ (1 - R).T) == 0  # rsub[a, b]: columns of row a are a subset of columns of row b
    rsame = rsub & rsub.T
    ridx = np.arange(A.shape[0])
    implied = rsub.T & (~rsame | (ridx[None, :] < ridx[:, None]))
    np.fill_diagonal(implied, False)
    keep_rows = ~implied.any(axis=1)
    return keep_cols, keep_rows


def _branch_and_bound(instance: CoverInstance, incumbent, time_budget) -> tuple[list[int], bool]:
    """Depth-first branch-and-bound for (weighted, optionally size-bounded) set cover.

    Dominated columns and implied rows are removed first. The search
    branches on the uncovered row with the fewest columns; a column tried in
    one branch is excluded from its later siblings. Nodes are pruned with the
    best of three lower bounds: ``ceil(|uncovered| / max new coverage)``
    columns, the sum over uncovered rows of the cheapest cost per newly
    covered row, and the cheapest-column sum over a set of uncovered rows no
    two of which share a column.
    """
    unicost = instance.costs is None
    cand_all = np.array(instance.candidates)
    c_all = np.ones(len(cand_all)) if unicost else instance.costs[cand_all]
    keep_cols, keep_rows = _reduce(instance.incidence.cover[:, cand_all], c_all)
    cand = cand_all[keep_cols]
    A = instance.incidence.cover[np.ix_(keep_rows, cand)]
    c = c_all[keep_cols]
    n_rows, n_cols = A.shape
    row_bits = [sum(1 << int(j) for j in np.flatnonzero(A[r])) for r in range(n_rows)]
    max_size = instance.max_size
    deadline = None if time_budget is None else time.monotonic() + time_budget

    best_cols: list[int] | None = None
    best_cost = math.inf
    if incumbent is not None:
        best_cols = sorted(int(j) for j in incumbent)
        best_cost = instance.cost_of(best_cols)

    def lower_bound(unc: np.ndarray, allowed: np.ndarray) -> tuple[float, int]:
        rows = np.flatnonzero(unc)
        sub = A[rows][:, allowed]
        new = sub.sum(axis=0)
        maxdeg = int(new.max()) if new.size else 0
        if maxdeg == 0:
            return math.inf, 0
        min_cols = -(-len(rows) // maxdeg)
        ratio = np.where(new > 0, c[allowed] / np.maximum(new, 1), math.inf)
        row_min = np.where(sub, ratio[None, :], math.inf).min(axis=1)
        if np.isinf(row_min).any():
            return math.inf, min_cols
        lb = float(row_min.sum())

        allowed_bits = sum(1 << int(j) for j in np.flatnonzero(allowed))
        cheapest = np.where(sub, c[allowed][None, :], math.inf).min(axis=1)
        used = 0
        packed = 0.0
        n_packed = 0
        for pos in np.argsort(sub.sum(axis=1), kind="stable"):
            m = row_bits[rows[pos]] & allowed_bits
            if not m & used:
                used |= m
                packed += float(cheapest[pos])
                n_packed += 1
        lb = max(lb, packed)
        min_cols = max(min_cols, n_packed)
        if unicost:
            lb = max(float(min_cols), math.ceil(lb - _EPS))
        return lb, min_cols

    def search(unc: np.ndarray, forbidden: np.ndarray, chosen: list[int], cost: float):
        nonlocal best_cols, best_cost
        if deadline is not None and time.monotonic() > deadline:
            raise _Timeout
        if not unc.any():
            if cost < best_cost - _EPS:
                best_cols, best_cost = sorted(int(cand[j]) for j in chosen), cost
            return
        if max_size is not None and len(chosen) >= max_size:
            return
        allowed = ~forbidden
        lb, min_cols = lower_bound(unc, allowed)
        if cost + lb >= best_cost - _EPS:
            return
        if max_size is not None and len(chosen) + min_cols > max_size:
            return
        rows = np.flatnonzero(unc)
        degree = A[rows][:, allowed].sum(axis=1)
        r = int(rows[int(np.argmin(degree))])
        branch = np.flatnonzero(A[r] & allowed)
        new = A[unc][:, branch].sum(axis=0)
        if unicost:
            order = np.lexsort((branch, -new))
        else:
            order = np.lexsort((branch, c[branch], c[branch] / new))
        local_forbidden = forbidden.copy()
        for j in branch[order]:
            j = int(j)
            chosen.append(j)
            search(unc & ~A[:, j], local_forbidden, chosen, cost + float(c[j]))
            chosen.pop()
            local_forbidden[j] = True

    optimal = True
    try:
        search(np.ones(n_rows, dtype=bool), np.zeros(n_cols, dtype=bool), [], 0.0)
    except _Timeout:
        optimal = False
    if best_cols is None:
        raise Infeasible(f"no cover within {max_size} columns")
    return best_cols, optimal


def _solve_cover(instance, backend, time_budget, incumbent) -> Selection:
    _check_coverable(instance)
    backend = resolve_backend(backend, instance)
    max_size = instance.max_size

    start = greedy_cover(instance)
    if max_size is not None and len(start) > max_size:
        start = None
    if incumbent is not None:
        inc_cols = [int(c) for c in incumbent]
        feasible = instance.incidence.covered_mask(inc_cols).all() and (
            max_size is None or len(inc_cols) <= max_size
        )
        if feasible and (start is None or instance.cost_of(inc_cols) < instance.cost_of(start) - _EPS):
            start = inc_cols
    if max_size is not None and start is None and backend == "greedy":
        raise Infeasible(f"greedy found no cover within {max_size} columns; pass an incumbent")

    if backend == "greedy":
        cols = start if max_size is None else _local_improve(instance, start)
        return _make_selection(instance, cols, instance.cost_of(cols), optimal=False)
    cols, optimal = _branch_and_bound(instance, start, time_budget)
    return _make_selection(instance, cols, instance.cost_of(cols), optimal=optimal)


def solve_unicost(instance: CoverInstance, backend: str = "auto", time_budget: float | None = None,
                  incumbent: Sequence[int] | None = None) -> Selection:
    """Smallest set of columns covering every row."""
    if instance.costs is not None:
        raise ValueError("unicost instance must not carry costs")
    return _solve_cover(instance, backend, time_budget, incumbent)


def solve_weighted(instance: CoverInstance, backend: str = "auto", time_budget: float | None = None,
                   incumbent: Sequence[int] | None = None) -> Selection:
    """Cheapest set of columns covering every row.

    With ``instance.max_size`` set, at most that many columns are used. The
    greedy backend then starts from the cost-ratio greedy cover (or from
    ``incumbent`` when the greedy cover is too large) and improves it by
    redundancy removal and single-column swaps.
    """
    if instance.costs is None:
        raise ValueError("weighted instance needs costs")
    return _solve_cover(instance, backend, time_budget, incumbent)


def _greedy_max_cover(masks, cand, t) -> list[int]:
    covered = 0
    chosen: list[int] = []
    remaining = list(cand)
    for _ in range(t):
        best, best_gain = None, 0
        for j in remaining:
            gain = _popcount(masks[j] & ~covered)
            if gain > best_gain:
                best, best_gain = j, gain
        if best is None:
            break
        chosen.append(best)
        remaining.remove(best)
        covered |= masks[best]
    return chosen


def solve_max_cover(instance: CoverInstance, t: int, backend: str = "auto",
                    time_budget: float | None = None) -> Selection:
    """At most ``t`` candidate columns covering the most rows.

    The greedy backend adds the column with the largest marginal gain until
    ``t`` columns are chosen or no column adds coverage. The exact backend
    enumerates subsets depth-first, pruning with the sum of the best
    remaining marginal gains.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    backend = resolve_backend(backend, instance)
    masks = instance.incidence.column_masks
    cand = list(instance.candidates)

    greedy = _greedy_max_cover(masks, cand, t)
    best_cols = greedy
    best_cov = _popcount(_union(masks, greedy))
    ceiling = _popcount(_union(masks, cand))
    optimal = best_cov == ceiling

    if backend == "exact" and not optimal:
        deadline = None if time_budget is None else time.monotonic() + time_budget

        def search(pos: int, covered: int, chosen: list[int]):
            nonlocal best_cols, best_cov
            if deadline is not None and time.monotonic() > deadline:
                raise _Timeout
            cov = _popcount(covered)
            if cov > best_cov:
                best_cols, best_cov = list(chosen), cov
            slots = t - len(chosen)
            if slots == 0 or best_cov == ceiling:
                return
            gains = sorted((_popcount(masks[j] & ~covered) for j in cand[pos:]), reverse=True)
            if cov + sum(gains[:slots]) <= best_cov:
                return
            for i in range(pos, len(cand)):
                j = cand[i]
                if masks[j] & ~covered:
                    chosen.append(j)
                    search(i + 1, covered | masks[j], chosen)
                    chosen.pop()

        optimal = True
        try:
            search(0, 0, [])
        except _Timeout:
            optimal = False
    return _make_selection(instance, best_cols, best_cov, optimal=optimal)


def dump_instance(instance: CoverInstance) -> str:
    """JSON debug dump: rows, columns with the rows each covers, costs, candidates."""
    inc = instance.incidence
    doc = {
        "rows": [str(lab) for lab in inc.labels],
        "columns": [
            {"id": item_id, "rows": [int(r) for r in np.flatnonzero(inc.cover[:, c])]}
            for c, item_id in enumerate(inc.item_ids)
        ],
        "costs": None if instance.costs is None else [float(x) for x in instance.costs],
        "candidate_columns": None if instance.candidate_columns is None else list(instance.candidate_columns),
        "max_size": instance.max_size,
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def load_instance(text: str) -> CoverInstance:
    doc = json.loads(text)
    labels = []
    for name in doc["rows"]:
        cat, _, value = name.partition(":")
        labels.append(Label(cat, value))
    cover = np.zeros((len(labels), len(doc["columns"])), dtype=bool)
    for c, col in enumerate(doc["columns"]):
        cover[col["rows"], c] = True
    inc = IncidenceMatrix(tuple(labels), tuple(col["id"] for col in doc["columns"]), cover)
    cand = doc.get("candidate_columns")
    return CoverInstance(
        inc,
        costs=None if doc.get("costs") is None else np.array(doc["costs"]),
        candidate_columns=None if cand is None else tuple(cand),
        max_size=doc.get("max_size"),
    )


def instance_from_sets(sets: Sequence, costs=None, n_rows: int | None = None, **kwargs) -> CoverInstance:
    """Build an instance from plain row-index sets, one per column (ids ``"0"``, ``"1"``, ...)."""
    if n_rows is None:
        n_rows = 1 + max((max(s) for s in sets if s), default=-1)
    cover = np.zeros((n_rows, len(sets)), dtype=bool)
    for c, s in enumerate(sets):
        cover[list(s), c] = True
    labels = tuple(Label("row", f"{r:04d}") for r in range(n_rows))
    inc = IncidenceMatrix(labels, tuple(str(c) for c in range(len(sets))), cover)
    return CoverInstance(inc, costs=None if costs is None else np.asarray(costs, dtype=float), **kwargs)
