"""Embedding bounded-degree spanning oriented trees into randomly perturbed digraphs."""

from .absorption import (
    Star,
    StarPack,
    complete_embedding,
    count_absorbing,
    greedy_star_pack,
    is_absorbing,
    min_absorbing_over_triples,
)
from .concentration import GoodStarParams, azuma_tail, expected_good_stars, falling_factorial, good_star_probability
from .digraph import Digraph, min_semidegree, union
from .embedding import Embedding, RetryPolicy, embed_almost, sample_uniform_injection, verify_embedding
from .models import dense_base, doubled_complete_bipartite, perturb, sample_binomial_digraph, sample_mirrored_digraph
from .oracle import contains_tree_bruteforce
from .pipeline import PipelineConfig, TrialRecord, run_trial, sweep
from .trees import OrientedTree, check_ordering, family_tree, prefix_subtree, random_tree, valid_ordering

__version__ = "0.1.0"

__all__ = [
    "Digraph",
    "Embedding",
    "GoodStarParams",
    "OrientedTree",
    "PipelineConfig",
    "RetryPolicy",
    "Star",
    "StarPack",
    "TrialRecord",
    "azuma_tail",
    "check_ordering",
    "complete_embedding",
    "contains_tree_bruteforce",
    "count_absorbing",
    "dense_base",
    "doubled_complete_bipartite",
    "embed_almost",
    "expected_good_stars",
    "falling_factorial",
    "family_tree",
    "good_star_probability",
    "greedy_star_pack",
    "is_absorbing",
    "min_absorbing_over_triples",
    "min_semidegree",
    "perturb",
    "prefix_subtree",
    "random_tree",
    "run_trial",
    "sample_binomial_digraph",
    "sample_mirrored_digraph",
    "sample_uniform_injection",
    "sweep",
    "union",
    "valid_ordering",
    "verify_embedding",
]
