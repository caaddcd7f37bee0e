"""Minimal, diverse item selection for recommender cold-start exploration."""
from .catalog import Catalog, IncidenceMatrix, Item, Label, build_incidence, load_catalog
from .clustering import ClusterModel, diversity_costs, kmeans
from .embed import EmbeddingMatrix, load_embeddings, pairwise_distance, tfidf_embed
from .explore import (
    ExplorationPlan,
    SimulationConfig,
    SimulationResult,
    greedy_warmstart_policy,
    order_weights,
    recursive_isp,
    simulate,
)
from .pipeline import (
    CoverageReport,
    IspConfig,
    IspResult,
    baseline_kmeans,
    baseline_random,
    coverage,
    solve_isp,
)
from .setcover import CoverInstance, Selection, solve_max_cover, solve_unicost, solve_weighted
from .warmstart import WarmStartMap, resolve_threshold, unit_coverage, warm_start

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "ClusterModel",
    "CoverInstance",
    "CoverageReport",
    "EmbeddingMatrix",
    "ExplorationPlan",
    "IncidenceMatrix",
    "IspConfig",
    "IspResult",
    "Item",
    "Label",
    "Selection",
    "SimulationConfig",
    "SimulationResult",
    "WarmStartMap",
    "baseline_kmeans",
    "baseline_random",
    "build_incidence",
    "coverage",
    "diversity_costs",
    "greedy_warmstart_policy",
    "kmeans",
    "load_catalog",
    "load_embeddings",
    "order_weights",
    "pairwise_distance",
    "recursive_isp",
    "resolve_threshold",
    "simulate",
    "solve_isp",
    "solve_max_cover",
    "solve_unicost",
    "solve_weighted",
    "tfidf_embed",
    "unit_coverage",
    "warm_start",
]
