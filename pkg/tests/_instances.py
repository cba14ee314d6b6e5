"""Engineered completion instances: a nearly complete host around an embedded prefix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from perturbtree.absorption import StarPack, greedy_star_pack, min_absorbing_over_triples
from perturbtree.digraph import Digraph
from perturbtree.embedding import Embedding
from perturbtree.seeding import stream
from perturbtree.trees import OrientedTree, prefix_subtree, random_tree, valid_ordering


@dataclass
class CompletionInstance:
    tree: OrientedTree
    order: tuple[int, ...]
    phi0: Embedding
    graph: Digraph
    pack: StarPack
    missing: int
    minimum: int


def engineered_instance(seed: int, max_n: int = 60) -> CompletionInstance | None:
    """Random tree, random prefix image, host = complete digraph minus a random
    fraction of edges (prefix images kept).  ``None`` when the all-triples
    absorbing minimum falls short of twice the number of missing vertices."""
    rng = stream(seed, "engineered")
    n = int(rng.integers(12, max_n + 1))
    delta = int(rng.integers(2, 5))
    tree = random_tree(n, delta, rng)
    order = valid_ordering(tree, int(rng.integers(n)))
    missing = int(rng.integers(1, max(2, n // 12) + 1))
    sub, originals = prefix_subtree(tree, order, n - 1 - missing)
    pack = greedy_star_pack(sub).relabeled(originals)
    hosts = rng.permutation(n)
    phi0 = Embedding(n, n)
    for v, h in zip(originals, hosts[: len(originals)].tolist()):
        phi0.assign(v, h)
    drop = float(rng.uniform(0.0, 0.12))
    m = rng.random((n, n)) >= drop
    np.fill_diagonal(m, False)
    for a, b in sub.edges:
        m[phi0[originals[a]], phi0[originals[b]]] = True
    graph = Digraph.from_matrix(m)
    minimum = min_absorbing_over_triples(pack, phi0, graph).count
    if minimum < 2 * missing:
        return None
    return CompletionInstance(tree, order, phi0, graph, pack, missing, minimum)


def engineered_instances(count: int, max_n: int = 60, start: int = 0) -> list[CompletionInstance]:
    out = []
    seed = start
    while len(out) < count:
        inst = engineered_instance(seed, max_n)
        seed += 1
        if inst is not None:
            out.append(inst)
    return out
