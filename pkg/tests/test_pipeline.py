import itertools

import numpy as np
import pytest

from isp.catalog import Catalog, Item, Label, build_incidence
from isp.embed import EmbeddingMatrix
from isp.errors import InfeasibleCatalog, InvalidSize
from isp.pipeline import IspConfig, baseline_kmeans, baseline_random, coverage, solve_isp
from isp.setcover import Selection
from isp.synth import blobs

from oracles import max_cover, min_cover, union_count


def make(labelsets, X):
    items = tuple(
        Item(f"i{n}", frozenset(Label(*s.split(":")) for s in labs)) for n, labs in enumerate(labelsets)
    )
    cats = tuple(sorted({lab.category for it in items for lab in it.labels}))
    return Catalog(items, cats), EmbeddingMatrix(tuple(it.id for it in items), np.asarray(X, float))


TEN = [
    ["g:a", "l:x"], ["g:b"], ["g:c", "l:y"], ["g:a", "g:b"], ["l:z"],
    ["g:c"], ["g:b", "l:z"], ["l:x", "l:y"], ["g:a"], ["g:c", "l:x"],
]
TEN_X = np.random.default_rng(0).uniform(0, 10, (10, 2))


def sets_of(inc):
    return [set(np.flatnonzero(inc.cover[:, c]).tolist()) for c in range(inc.n_cols)]


def test_dominating_item():
    cat, E = make([["g:a", "l:x", "l:y"], ["g:a"], ["l:y"]], [[0, 0], [1, 1], [2, 2]])
    res = solve_isp(cat, E)
    assert res.k == 1 and res.clusters.k == 1
    assert res.final.item_ids == ("i0",)


def test_ten_item_fixture_full_cover():
    cat, E = make(TEN, TEN_X)
    res = solve_isp(cat, E, IspConfig(seed=2))
    inc = res.incidence
    assert inc.n_rows == 6
    assert res.final.covered_rows == 6
    assert union_count(inc.cover, res.final.columns) == 6
    assert len(res.final) <= min_cover(sets_of(inc), 6)
    assert res.k == min_cover(sets_of(inc), 6)
    # the diverse cover is the cheapest cover of at most k items under the clustering costs
    ref = min_cover(sets_of(inc), 6, res.costs, max_size=res.k)
    assert res.diverse.objective == pytest.approx(ref, abs=1e-9)


def test_ten_item_fixture_t2():
    cat, E = make(TEN, TEN_X)
    res = solve_isp(cat, E, IspConfig(seed=2, t=2))
    assert len(res.final) == 2
    assert set(res.final.columns) <= set(res.diverse.columns)
    sub = [sets_of(res.incidence)[c] for c in res.diverse.columns]
    assert res.final.covered_rows == max_cover(sub, 2)
    best = max(union_count(res.incidence.cover, pair) for pair in itertools.combinations(res.diverse.columns, 2))
    assert res.final.covered_rows == best


def test_warm_start_mode_unbounded():
    cat, E = make(TEN, TEN_X)
    res = solve_isp(cat, E, IspConfig(seed=2, diversity_mode="warm_start"))
    ref = min_cover(sets_of(res.incidence), 6, res.costs)
    assert res.diverse.objective == pytest.approx(ref, abs=1e-9)
    assert res.final.covered_rows == 6


def test_greedy_backend_bounded():
    cat, E = make(TEN, TEN_X)
    res = solve_isp(cat, E, IspConfig(seed=2, backend="greedy"))
    assert len(res.diverse) <= res.k
    assert res.final.covered_rows == 6


def test_deterministic(movies, movies_embedding, movies_incidence):
    a = solve_isp(movies, movies_embedding, IspConfig(seed=4, t=10), movies_incidence)
    b = solve_isp(movies, movies_embedding, IspConfig(seed=4, t=10), movies_incidence)
    assert a.to_dict() == b.to_dict()
    assert len(a.final) == 10


def test_strict_rejects_uncoverable():
    cat, E = make(TEN, TEN_X)
    inc = build_incidence(cat, universe=[Label("g", "zzz")])
    assert [str(x) for x in inc.uncoverable] == ["g:zzz"]
    res = solve_isp(cat, E, IspConfig(), inc)
    assert res.coverage_report.uncoverable == ("g:zzz",)
    with pytest.raises(InfeasibleCatalog):
        solve_isp(cat, E, IspConfig(strict=True), inc)


def test_cost_multipliers_steer_choice():
    cat, E = make([["g:a"], ["g:a"], ["g:a"]], [[0, 0], [0.1, 0], [5, 5]])
    base = solve_isp(cat, E, IspConfig(seed=0))
    fav = base.final.item_ids[0]
    res = solve_isp(cat, E, IspConfig(seed=0, cost_multipliers={fav: 1000.0}))
    assert base.costs[cat.index_of(fav)] > 0
    assert res.final.item_ids[0] != fav


def test_coverage_empty_and_full():
    cat, _ = make(TEN, TEN_X)
    inc = build_incidence(cat)
    empty = coverage([], inc)
    assert empty.overall == 0.0 and all(c == 0 for c, _ in empty.per_category.values())
    full = coverage(cat.ids, inc)
    assert full.overall == 1.0 and all(full.fraction(c) == 1.0 for c in full.per_category)


def test_coverage_union_oracle(movies, movies_incidence):
    rng = np.random.default_rng(1)
    for _ in range(5):
        cols = sorted(int(i) for i in rng.choice(1000, 30, replace=False))
        ids = [movies.ids[c] for c in cols]
        rep = coverage(ids, movies_incidence)
        assert rep.covered == union_count(movies_incidence.cover, cols)
        for cat_name, (cov, tot) in rep.per_category.items():
            rows = [r for r, lab in enumerate(movies_incidence.labels) if lab.category == cat_name]
            assert tot == len(rows)
            assert cov == sum(bool(movies_incidence.cover[r, cols].any()) for r in rows)


def test_coverage_accepts_selection():
    cat, _ = make(TEN, TEN_X)
    inc = build_incidence(cat)
    sel = Selection(("i0", "i1"), (0, 1), 2.0, None)
    assert coverage(sel, inc).covered == 3


def test_baselines_full_size_and_determinism():
    cat, E = make(TEN, TEN_X)
    assert sorted(baseline_random(cat, 10, seed=3).item_ids) == sorted(cat.ids)
    assert sorted(baseline_kmeans(cat, E, 10, seed=3).item_ids) == sorted(cat.ids)
    assert baseline_random(cat, 4, seed=3) == baseline_random(cat, 4, seed=3)
    assert baseline_kmeans(cat, E, 4, seed=3) == baseline_kmeans(cat, E, 4, seed=3)
    for bad in (0, 11):
        with pytest.raises(InvalidSize):
            baseline_random(cat, bad)
        with pytest.raises(InvalidSize):
            baseline_kmeans(cat, E, bad)


def test_kmeans_baseline_two_blobs():
    X = blobs([[0, 0], [40, 0]], 15, 1.0, seed=1)
    cat, E = make([["g:a"]] * 30, X)
    sel = baseline_kmeans(cat, E, 2, seed=0)
    blob = sorted(c // 15 for c in sel.columns)
    assert blob == [0, 1]
