"""
Replaying an exploration period offline
========================================

Compares exploration policies on a catalog whose items sit in a few large
loose clusters and many small tight ones. Each repetition starts from a
random warm set, explores one batch per policy, then warm-starts what is
left.
"""

from isp import SimulationConfig, simulate
from isp.explore import recursive_isp
from isp.synth import clustered_fixture

catalog, E = clustered_fixture(seed=0)

# %%
# Recursive selection orders the whole catalog into rounds. Early rounds
# reach more labels and get larger weights.
plan = recursive_isp(catalog, E, batch=20)
for sel in plan.rounds[:4]:
    print(f"round {sel.round}: {len(sel)} items, {sel.covered_rows} labels, weight {sel.per_item_weight[0]:.3f}")

# %%
# Fifty repetitions of one exploration period.
config = SimulationConfig(K=200, k=20, n=50, batch=20, q=0.1, seed=8)
result = simulate(catalog, E, config, threads=4)
print(result.table())

# Every record satisfies warm_after = k + batch + warmstarted.
assert all(r.warm_after == config.k + config.batch + r.warmstarted for r in result.records)
