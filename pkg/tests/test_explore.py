import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isp.catalog import Catalog, Item, Label, build_incidence
from isp.embed import EmbeddingMatrix, distance_matrix
from isp.errors import ConfigError
from isp.explore import (
    POLICIES,
    ExplorationPlan,
    SimulationConfig,
    greedy_warmstart_policy,
    order_weights,
    recursive_isp,
    simulate,
)
from isp.pipeline import IspConfig
from isp.setcover import Selection

from oracles import union_count


def plan_of(sizes):
    rounds, n = [], 0
    for r, size in enumerate(sizes, start=1):
        ids = tuple(f"i{n + j}" for j in range(size))
        rounds.append(Selection(ids, tuple(range(n, n + size)), float(size), None, round=r))
        n += size
    return ExplorationPlan(tuple(rounds), {})


def test_single_round_weights():
    for scheme in ("inverse_round", "linear_decay"):
        assert set(order_weights(plan_of([4]), scheme).values()) == {1.0}


def test_inverse_round_three_rounds():
    w = order_weights(plan_of([1, 1, 1]), "inverse_round")
    assert w == {"i0": 1.0, "i1": 0.5, "i2": pytest.approx(1 / 3)}
    lin = order_weights(plan_of([1, 1, 1]), "linear_decay")
    assert lin == {"i0": 1.0, "i1": pytest.approx(2 / 3), "i2": pytest.approx(1 / 3)}


@settings(max_examples=60)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=8), st.sampled_from(["inverse_round", "linear_decay"]))
def test_weights_order_follows_rounds(sizes, scheme):
    plan = plan_of(sizes)
    w = order_weights(plan, scheme)
    round_of = plan.round_of()
    for a in w:
        for b in w:
            if round_of[a] < round_of[b]:
                assert w[a] > w[b]
            elif round_of[a] == round_of[b]:
                assert w[a] == w[b]
    with pytest.raises(ValueError):
        order_weights(plan, "bogus")


def toy(n, seed=0):
    rng = np.random.default_rng(seed)
    items = tuple(
        Item(f"i{j}", frozenset({Label("g", f"v{rng.integers(4)}"), Label("l", f"x{rng.integers(3)}")}))
        for j in range(n)
    )
    cat = Catalog(items, ("g", "l"))
    return cat, EmbeddingMatrix(cat.ids, rng.standard_normal((n, 2)))


def test_six_items_batch_two():
    cat, E = toy(6)
    plan = recursive_isp(cat, E, 2)
    assert plan.n_rounds == 3
    seen = [i for sel in plan.rounds for i in sel.item_ids]
    assert len(seen) == len(set(seen)) == 6
    assert [sel.round for sel in plan.rounds] == [1, 2, 3]


def test_batch_covers_catalog():
    cat, E = toy(7)
    plan = recursive_isp(cat, E, 7)
    assert plan.n_rounds == 1
    assert sorted(plan.rounds[0].item_ids) == sorted(cat.ids)
    plan = recursive_isp(cat, E, 5)
    assert [len(s) for s in plan.rounds] == [5, 2]


def test_round_one_covers_most(data_dir):
    from isp import load_catalog, tfidf_embed
    cat = load_catalog(data_dir / "small.csv")
    E = tfidf_embed(cat, 200)
    inc = build_incidence(cat)
    plan = recursive_isp(cat, E, 5, IspConfig(seed=1), inc)
    cov = [union_count(inc.cover, sel.columns) for sel in plan.rounds]
    assert all(cov[0] >= c for c in cov[1:])
    assert sum(len(s) for s in plan.rounds) == len(cat)
    assert all(s.per_item_weight == tuple([1.0 / s.round] * len(s)) for s in plan.rounds)


def emb(X):
    X = np.asarray(X, dtype=float)
    return EmbeddingMatrix(tuple(f"i{n:02d}" for n in range(len(X))), X)


def test_hub_selected():
    E = emb([[100, 100], [1, 0], [-1, 0], [0, 1], [0, -1], [0, 0]])
    sel = greedy_warmstart_policy(["i00"], [f"i0{j}" for j in range(1, 6)], E, 0.1, 1, w=1.0)
    assert sel.item_ids == ("i05",)
    assert sel.objective == 4


def test_zero_threshold_lowest_index():
    E = emb(np.random.default_rng(0).standard_normal((10, 2)))
    cold = [f"i{j:02d}" for j in (7, 3, 5, 9)]
    sel = greedy_warmstart_policy(["i00"], cold, E, 0.1, 3, w=0.0)
    assert sel.item_ids == ("i03", "i05", "i07")


def test_greedy_trace_brute_force():
    X = np.random.default_rng(3).standard_normal((20, 2))
    E = emb(X)
    warm, cold = [0, 1, 2], list(range(3, 20))
    w = 0.6
    sel = greedy_warmstart_policy([E.item_ids[i] for i in warm], [E.item_ids[i] for i in cold], E, 0.1, 3, w=w)
    D = distance_matrix(E)
    matched = {c for c in cold if any(D[c, s] <= w for s in warm)}
    picked = []
    for _ in range(3):
        best, best_gain = None, -1
        for c in cold:
            if c in picked:
                continue
            gain = sum(1 for j in cold if j != c and j not in matched and j not in picked and D[c, j] <= w)
            if gain > best_gain:
                best, best_gain = c, gain
        picked.append(best)
        matched |= {j for j in cold if D[best, j] <= w}
    assert [int(i[1:]) for i in sel.item_ids] == picked


def test_sim_config_validation():
    with pytest.raises(ConfigError):
        SimulationConfig(K=10, k=10).validate(20)
    with pytest.raises(ConfigError):
        SimulationConfig(K=30, k=2).validate(20)
    with pytest.raises(ConfigError):
        SimulationConfig(K=10, k=2, policies=("bogus",)).validate(20)
    with pytest.raises(ConfigError):
        SimulationConfig.from_dict({"K": 10, "k": 2, "nope": 1})
    cfg = SimulationConfig.from_dict({"K": 10, "k": 2, "policy": "random", "isp": {"pair_categories": [["a", "b"]]}})
    assert cfg.policies == ("random",)
    assert cfg.isp.pair_categories == (("a", "b"),)


def test_explore_everything(clustered):
    cat, E = clustered
    res = simulate(cat, E, SimulationConfig(K=50, k=10, n=3, batch=40, seed=1))
    for r in res.records:
        assert r.cold_subject == 0 and r.success_ratio == 1.0 and r.warm_after == 50


def test_maximal_quantile_warms_all(clustered):
    cat, E = clustered
    res = simulate(cat, E, SimulationConfig(K=60, k=5, n=3, batch=5, q=1.0, seed=2))
    assert all(r.warm_after == 60 and r.success_ratio == 1.0 for r in res.records)


def test_identity_and_thread_independence(clustered):
    cat, E = clustered
    cfg = SimulationConfig(K=120, k=12, n=4, batch=10, q=0.1, seed=5)
    a = simulate(cat, E, cfg)
    b = simulate(cat, E, cfg, threads=3)
    assert a.to_dict() == b.to_dict()
    assert {r.policy for r in a.records} == set(POLICIES)
    for r in a.records:
        assert r.warm_after == cfg.k + cfg.batch + r.warmstarted
        assert r.explored == cfg.batch
    assert "success_ratio" in a.table()


def test_top_batch_matches_first_round(clustered):
    cat, E = clustered
    cfg = SimulationConfig(K=100, k=10, n=4, batch=10, seed=6, policies=("isp_recursive", "isp_order_weighted"))
    res = simulate(cat, E, cfg)
    assert np.array_equal(res.values("isp_recursive", "warm_after"), res.values("isp_order_weighted", "warm_after"))
    with pytest.raises(ConfigError):
        SimulationConfig(K=10, k=2, exploration="bogus").validate(20)


def test_uncertainty_changes_order_weighted(clustered):
    cat, E = clustered
    cfg = SimulationConfig(K=80, k=8, n=2, batch=8, seed=0, policies=("isp_order_weighted",),
                           exploration="weighted_random")
    base = simulate(cat, E, cfg)
    again = simulate(cat, E, cfg)
    assert base.to_dict() == again.to_dict()
    skew = {i: (1e6 if n % 2 else 1.0) for n, i in enumerate(cat.ids)}
    from dataclasses import replace
    res = simulate(cat, E, replace(cfg, uncertainty=skew))
    assert all(r.explored == 8 for r in res.records)
