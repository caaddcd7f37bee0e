"""Active exploration on top of item selection, and the offline simulator.

Exploration policies decide which cold items to expose next. The simulator
replays one exploration period on random warm/cold splits and counts how
many cold items end up warm-started afterwards.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .catalog import Catalog, IncidenceMatrix, build_incidence
from .embed import EmbeddingMatrix, distance_matrix
from .errors import ConfigError
from .pipeline import IspConfig, solve_isp
from .setcover import Selection, _popcount, _union
from .warmstart import SAMPLE_CAP, resolve_threshold, warm_start

POLICIES = ("random", "isp_oneshot", "isp_recursive", "isp_order_weighted", "greedy_warmstart")
WEIGHT_SCHEMES = ("inverse_round", "linear_decay")
EXPLORATION_MODES = ("top_batch", "weighted_random")


@dataclass(frozen=True)
class ExplorationPlan:
    rounds: tuple
    weights: dict

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def round_of(self) -> dict:
        return {i: sel.round for sel in self.rounds for i in sel.item_ids}

    def to_dict(self) -> dict:
        return {
            "rounds": [sel.to_dict() for sel in self.rounds],
            "weights": dict(self.weights),
        }


def order_weights(plan: ExplorationPlan, scheme: str = "inverse_round") -> dict:
    """Weight per item from the round it was selected in; earlier rounds weigh more.

    ``inverse_round`` gives ``1 / round``; ``linear_decay`` gives
    ``(R - round + 1) / R`` for ``R`` rounds.
    """
    if not plan.rounds:
        raise ValueError("plan has no rounds")
    if scheme not in WEIGHT_SCHEMES:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    R = max(sel.round for sel in plan.rounds)
    out = {}
    for sel in plan.rounds:
        w = 1.0 / sel.round if scheme == "inverse_round" else (R - sel.round + 1) / R
        for item_id in sel.item_ids:
            out[item_id] = w
    return out


def recursive_isp(
    catalog: Catalog,
    E: EmbeddingMatrix,
    batch: int,
    config: IspConfig = IspConfig(),
    incidence: IncidenceMatrix | None = None,
    items: Sequence[str] | None = None,
    max_rounds: int | None = None,
    scheme: str = "inverse_round",
) -> ExplorationPlan:
    """Solve item selection repeatedly on the items not yet chosen.

    Each round runs the full selection with ``t = batch`` over the remaining
    items (restricted to ``items`` when given), covering whatever labels
    those items can still cover. Rounds shorter than ``batch`` are padded
    with the lowest-index remaining items, so every round but the last has
    exactly ``batch`` items.
    """
    if batch < 1:
        raise ValueError("batch must be at least 1")
    if incidence is None:
        incidence = build_incidence(catalog, config.categories, config.pair_categories)
    if items is None:
        remaining = list(range(len(catalog)))
    else:
        remaining = sorted(catalog.index_of(i) for i in set(items))
    round_config = replace(config, t=batch, strict=False)
    masks = incidence.column_masks

    rounds = []
    r = 0
    while remaining and (max_rounds is None or r < max_rounds):
        r += 1
        if len(remaining) <= batch:
            picks = list(remaining)
        else:
            sub_inc = incidence.restrict(remaining)
            picks = []
            if sub_inc.n_rows:
                res = solve_isp(catalog.subset(remaining), E.subset(remaining), round_config, sub_inc)
                picks = [remaining[c] for c in res.final.columns]
            chosen = set(picks)
            for i in remaining:
                if len(picks) >= batch:
                    break
                if i not in chosen:
                    picks.append(i)
        ids = tuple(catalog.items[i].id for i in picks)
        cols = tuple(incidence.column(i) for i in ids)
        covered = _popcount(_union(masks, cols))
        rounds.append(Selection(ids, cols, float(len(ids)), covered, round=r))
        taken = set(picks)
        remaining = [i for i in remaining if i not in taken]

    plan = ExplorationPlan(tuple(rounds), {})
    weights = order_weights(plan, scheme)
    rounds = tuple(replace(sel, per_item_weight=tuple(weights[i] for i in sel.item_ids)) for sel in rounds)
    return ExplorationPlan(rounds, weights)


def greedy_warmstart_policy(
    warm: Sequence[str],
    cold: Sequence[str],
    E: EmbeddingMatrix,
    q: float,
    batch: int,
    w: float | None = None,
    sample_cap: int = SAMPLE_CAP,
    seed: int = 0,
) -> Selection:
    """Explore the cold items that would warm-start the most other cold items.

    Each step promotes the cold item with the most still-unmatched cold
    neighbours within ``w`` (ties: lower index), then marks those
    neighbours as matched. ``objective`` is the total number of cold items
    newly matched by the picks.
    """
    if batch < 1:
        raise ValueError("batch must be at least 1")
    if w is None:
        w = resolve_threshold(E, q, sample_cap, seed)
    pos = {item_id: i for i, item_id in enumerate(E.item_ids)}
    warm_idx = sorted(pos[i] for i in set(warm))
    cold_idx = sorted(pos[i] for i in set(cold))
    n = len(cold_idx)
    if n == 0:
        return Selection((), (), 0.0, None)

    within = distance_matrix(E, cold_idx, cold_idx) <= w
    if warm_idx:
        matched = (distance_matrix(E, cold_idx, warm_idx) <= w).any(axis=1)
    else:
        matched = np.zeros(n, dtype=bool)
    available = np.ones(n, dtype=bool)
    picks = []
    total = 0
    for _ in range(min(batch, n)):
        open_ = ~matched & available
        gains = (within & open_[None, :]).sum(axis=1) - open_
        gains = np.where(available, gains, -1)
        best = int(np.argmax(gains))
        picks.append(best)
        total += int(gains[best])
        available[best] = False
        matched |= within[best]
    cols = tuple(cold_idx[p] for p in picks)
    return Selection(tuple(E.item_ids[c] for c in cols), cols, float(total), None)


@dataclass(frozen=True)
class SimulationConfig:
    K: int
    k: int
    n: int = 10
    batch: int = 10
    policies: tuple = POLICIES
    q: float = 0.1
    seed: int = 0
    sample_cap: int = SAMPLE_CAP
    weight_scheme: str = "inverse_round"
    # how isp_order_weighted turns weights into a batch
    exploration: str = "top_batch"
    isp: IspConfig = field(default_factory=IspConfig)
    # external per-item uncertainty, multiplied into order-based sampling weights
    uncertainty: Mapping[str, float] | None = None

    def validate(self, n_items: int) -> None:
        if not 0 <= self.k < self.K:
            raise ConfigError(f"need 0 <= k < K, got k={self.k}, K={self.K}")
        if self.K > n_items:
            raise ConfigError(f"K={self.K} exceeds catalog size {n_items}")
        if self.batch < 1 or self.n < 1:
            raise ConfigError("batch and n must be at least 1")
        if not 0 < self.q <= 1:
            raise ConfigError(f"q={self.q} must lie in (0, 1]")
        unknown = set(self.policies) - set(POLICIES)
        if unknown or not self.policies:
            raise ConfigError(f"unknown or empty policies: {sorted(unknown)}")
        if self.weight_scheme not in WEIGHT_SCHEMES:
            raise ConfigError(f"unknown weight scheme {self.weight_scheme!r}")
        if self.exploration not in EXPLORATION_MODES:
            raise ConfigError(f"unknown exploration mode {self.exploration!r}")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SimulationConfig":
        doc = dict(doc)
        if "policy" in doc:
            doc["policies"] = [doc.pop("policy")]
        if "policies" in doc:
            doc["policies"] = tuple(doc["policies"])
        isp = doc.pop("isp", None) or {}
        if "pair_categories" in isp:
            isp["pair_categories"] = tuple(tuple(p) for p in isp["pair_categories"])
        if isp.get("categories") is not None:
            isp["categories"] = tuple(isp["categories"])
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown simulation keys: {sorted(extra)}")
        try:
            return cls(isp=IspConfig(**isp), **doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["policies"] = list(self.policies)
        out["isp"]["pair_categories"] = [list(p) for p in self.isp.pair_categories]
        return out


@dataclass(frozen=True)
class RepetitionRecord:
    repetition: int
    policy: str
    explored: int
    warm_after: int
    warmstarted: int
    cold_subject: int
    success_ratio: float


@dataclass(frozen=True)
class SimulationResult:
    config: SimulationConfig
    records: tuple

    def values(self, policy: str, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records if r.policy == policy], dtype=float)

    @property
    def aggregates(self) -> dict:
        out = {}
        for policy in self.config.policies:
            out[policy] = {
                metric: {
                    "mean": float(self.values(policy, metric).mean()),
                    "std": float(self.values(policy, metric).std()),
                }
                for metric in ("warm_after", "warmstarted", "success_ratio")
            }
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "repetitions": [asdict(r) for r in self.records],
            "aggregates": self.aggregates,
        }

    def table(self) -> str:
        head = f"{'policy':<20} {'success_ratio':>14} {'(std)':>8} {'warm_after':>11} {'(std)':>8}"
        lines = [head, "-" * len(head)]
        for policy, agg in self.aggregates.items():
            sr, wa = agg["success_ratio"], agg["warm_after"]
            lines.append(
                f"{policy:<20} {sr['mean']:>14.4f} {sr['std']:>8.4f} {wa['mean']:>11.2f} {wa['std']:>8.2f}"
            )
        return "\n".join(lines) + "\n"


def _pad(picks: list[int], pool: Sequence[int], size: int) -> list[int]:
    chosen = set(picks)
    for i in pool:
        if len(picks) >= size:
            break
        if i not in chosen:
            picks.append(i)
            chosen.add(i)
    return picks


def _explore(policy, cfg, catalog, E, inc, warm, cold, size, w, rng) -> list[int]:
    """Local indices of the ``size`` cold items explored by ``policy``."""
    if size >= len(cold):
        return list(cold)
    cold_ids = [catalog.items[i].id for i in cold]
    if policy == "random":
        return [int(i) for i in rng.choice(cold, size=size, replace=False)]
    if policy == "isp_oneshot":
        res = solve_isp(catalog, E, replace(cfg.isp, t=size, strict=False), inc)
        cold_set = set(cold)
        picks = [c for c in res.final.columns if c in cold_set]
        return _pad(picks, cold, size)
    if policy == "isp_recursive":
        plan = recursive_isp(catalog, E, size, cfg.isp, inc, items=cold_ids, max_rounds=1)
        return [catalog.index_of(i) for i in plan.rounds[0].item_ids]
    if policy == "isp_order_weighted":
        plan = recursive_isp(catalog, E, size, cfg.isp, inc, items=cold_ids, scheme=cfg.weight_scheme)
        weights = np.array([plan.weights[i] for i in cold_ids])
        if cfg.uncertainty:
            weights = weights * np.array([cfg.uncertainty.get(i, 1.0) for i in cold_ids])
        if cfg.exploration == "top_batch":
            # heaviest first, ties to the lower index
            order = np.lexsort((np.arange(len(cold)), -weights))
            return [cold[int(p)] for p in order[:size]]
        if np.count_nonzero(weights) < size:
            weights = weights + 1e-12
        picks = rng.choice(len(cold), size=size, replace=False, p=weights / weights.sum())
        return [cold[int(p)] for p in picks]
    if policy == "greedy_warmstart":
        warm_ids = [catalog.items[i].id for i in warm]
        sel = greedy_warmstart_policy(warm_ids, cold_ids, E, cfg.q, size, w=w)
        return [catalog.index_of(i) for i in sel.item_ids]
    raise ConfigError(f"unknown policy {policy!r}")


def _repetition(rep, ss, catalog, E, incidence, config) -> list[RepetitionRecord]:
    rng = np.random.default_rng(ss)
    if config.K < len(catalog):
        members = sorted(int(i) for i in rng.choice(len(catalog), size=config.K, replace=False))
    else:
        members = list(range(len(catalog)))
    sub_cat = catalog.subset(members)
    sub_E = E.subset(members)
    sub_inc = incidence.restrict(members)
    warm = sorted(int(i) for i in rng.choice(config.K, size=config.k, replace=False))
    warm_set = set(warm)
    cold = [i for i in range(config.K) if i not in warm_set]
    w = resolve_threshold(sub_E, config.q, config.sample_cap, seed=int(rng.integers(2**31)))
    size = min(config.batch, len(cold))

    records = []
    for policy in config.policies:
        prng = np.random.default_rng([config.seed, rep, POLICIES.index(policy)])
        explored = _explore(policy, config, sub_cat, sub_E, sub_inc, warm, cold, size, w, prng)
        explored_set = set(explored)
        remaining = [i for i in cold if i not in explored_set]
        new_warm = [sub_cat.items[i].id for i in warm + explored]
        started: list[str] = []
        if remaining:
            ws = warm_start(new_warm, [sub_cat.items[i].id for i in remaining], sub_E, config.q, w=w)
            started = list(ws.assignments)
        cold_subject = len(remaining)
        records.append(
            RepetitionRecord(
                repetition=rep,
                policy=policy,
                explored=len(explored),
                warm_after=len(set(new_warm) | set(started)),
                warmstarted=len(started),
                cold_subject=cold_subject,
                success_ratio=len(started) / cold_subject if cold_subject else 1.0,
            )
        )
    return records


def simulate(catalog: Catalog, E: EmbeddingMatrix, config: SimulationConfig,
             incidence: IncidenceMatrix | None = None, threads: int = 1) -> SimulationResult:
    """Offline replay of one exploration period, ``config.n`` times.

    Each repetition draws ``K`` items (all of them when the catalog has
    exactly ``K``), marks ``k`` of them warm at random, lets every policy
    explore ``batch`` cold items, then warm-starts the remaining cold items
    from the enlarged warm set. All policies see the same draws.
    Repetitions are independent and may run on up to ``threads`` threads;
    the result does not depend on the thread count.
    """
    config.validate(len(catalog))
    if tuple(E.item_ids) != tuple(catalog.ids):
        raise ConfigError("embedding rows are not aligned with catalog order")
    if incidence is None:
        incidence = build_incidence(catalog, config.isp.categories, config.isp.pair_categories)

    rep_seeds = np.random.SeedSequence(config.seed).spawn(config.n)
    jobs = [(rep, ss, catalog, E, incidence, config) for rep, ss in enumerate(rep_seeds)]
    if threads > 1 and config.n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(lambda job: _repetition(*job), jobs))
    else:
        per_rep = [_repetition(*job) for job in jobs]
    return SimulationResult(config, tuple(r for recs in per_rep for r in recs))
