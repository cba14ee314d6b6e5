"""Exhaustive oriented-tree containment for small hosts."""

from __future__ import annotations

from .digraph import Digraph
from .embedding import Embedding, _placement_plan, verify_embedding
from .trees import OrientedTree, valid_ordering

DEFAULT_LIMIT = 12


def contains_tree_bruteforce(
    tree: OrientedTree, graph: Digraph, limit: int = DEFAULT_LIMIT
) -> tuple[bool, Embedding | None]:
    """Decide whether ``graph`` contains a copy of ``tree``; return a witness if so.

    Backtracks over the tree's breadth-first ordering from its centre.  Host
    candidates must be unused, adjacent to the parent's image in the right
    direction, and have out/in-degree at least the tree vertex's.
    """
    if graph.n > limit:
        raise ValueError(f"host has {graph.n} vertices, above the brute-force limit {limit}")
    if tree.n > graph.n:
        return False, None
    plan = _placement_plan(tree, valid_ordering(tree, tree.center()))
    need_out = [len(tree.out_neighbors(v)) for v, _, _ in plan]
    need_in = [len(tree.in_neighbors(v)) for v, _, _ in plan]
    pos_of = {v: i for i, (v, _, _) in enumerate(plan)}
    parent = [pos_of[p] if p >= 0 else -1 for _, p, _ in plan]
    fits = [
        [y for y in range(graph.n) if graph.out_degree(y) >= need_out[i] and graph.in_degree(y) >= need_in[i]]
        for i in range(len(plan))
    ]
    image = [-1] * len(plan)
    used = [False] * graph.n

    def extend(pos: int) -> bool:
        if pos == len(plan):
            return True
        if pos == 0:
            options = fits[0]
        else:
            x = image[parent[pos]]
            nbrs = graph.out_set(x) if plan[pos][2] else graph.in_set(x)
            options = [y for y in fits[pos] if y in nbrs]
        for y in options:
            if used[y]:
                continue
            used[y] = True
            image[pos] = y
            if extend(pos + 1):
                return True
            used[y] = False
        image[pos] = -1
        return False

    if not extend(0):
        return False, None
    witness = Embedding(tree.n, graph.n)
    for (v, _, _), y in zip(plan, image):
        witness.assign(v, y)
    assert verify_embedding(tree, graph, witness)
    return True, witness
