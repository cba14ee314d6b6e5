"""Injective tree-to-host maps, their verification, and the almost-embedder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .digraph import Digraph
from .seeding import SeedLike, as_generator
from .trees import OrientedTree

UNMAPPED = -1


class Embedding:
    """Partial injective map tree vertex -> host vertex, stored both ways."""

    def __init__(self, tree_size: int, host_size: int):
        if tree_size > host_size:
            raise ValueError(f"cannot inject {tree_size} tree vertices into {host_size} host vertices")
        self.forward = np.full(tree_size, UNMAPPED, dtype=np.int64)
        self.inverse = np.full(host_size, UNMAPPED, dtype=np.int64)

    @property
    def host_size(self) -> int:
        return len(self.inverse)

    @classmethod
    def from_mapping(cls, mapping: dict[int, int] | Sequence[int], tree_size: int, host_size: int) -> "Embedding":
        emb = cls(tree_size, host_size)
        items = mapping.items() if isinstance(mapping, dict) else enumerate(mapping)
        for t, h in items:
            emb.assign(int(t), int(h))
        return emb

    def assign(self, t: int, h: int) -> None:
        if self.forward[t] != UNMAPPED:
            raise ValueError(f"tree vertex {t} already mapped")
        if self.inverse[h] != UNMAPPED:
            raise ValueError(f"host vertex {h} already used")
        self.forward[t] = h
        self.inverse[h] = t

    def unassign(self, t: int) -> None:
        h = self.forward[t]
        if h != UNMAPPED:
            self.inverse[h] = UNMAPPED
            self.forward[t] = UNMAPPED

    def move(self, t: int, h: int) -> None:
        """Remap an already mapped tree vertex to the free host vertex ``h``."""
        self.unassign(t)
        self.assign(t, h)

    def __getitem__(self, t: int) -> int:
        return int(self.forward[t])

    def is_mapped(self, t: int) -> bool:
        return self.forward[t] != UNMAPPED

    def mapped(self) -> list[int]:
        return np.flatnonzero(self.forward != UNMAPPED).tolist()

    def image(self) -> set[int]:
        return set(self.forward[self.forward != UNMAPPED].tolist())

    def unused_hosts(self) -> list[int]:
        return np.flatnonzero(self.inverse == UNMAPPED).tolist()

    def is_total(self) -> bool:
        return bool((self.forward != UNMAPPED).all())

    def copy(self) -> "Embedding":
        other = Embedding.__new__(Embedding)
        other.forward = self.forward.copy()
        other.inverse = self.inverse.copy()
        return other

    def check_consistent(self) -> None:
        for t, h in enumerate(self.forward.tolist()):
            if h != UNMAPPED:
                assert self.inverse[h] == t
        for h, t in enumerate(self.inverse.tolist()):
            if t != UNMAPPED:
                assert self.forward[t] == h

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return np.array_equal(self.forward, other.forward) and np.array_equal(self.inverse, other.inverse)

    def __repr__(self) -> str:
        return f"Embedding({len(self.mapped())}/{len(self.forward)} mapped into {self.host_size})"


class UnmappedVertices(ValueError):
    def __init__(self, vertices: list[int]):
        super().__init__(f"embedding leaves tree vertices unmapped: {vertices[:10]}")
        self.vertices = vertices


def embedding_violations(tree: OrientedTree, graph: Digraph, phi: Embedding) -> list[tuple[int, int]]:
    """Tree edges whose image is not an edge of ``graph``."""
    missing = np.flatnonzero(phi.forward == UNMAPPED).tolist()
    if missing:
        raise UnmappedVertices(missing)
    f = phi.forward
    return [(u, v) for u, v in tree.edges if not graph.has_edge(int(f[u]), int(f[v]))]


def verify_embedding(tree: OrientedTree, graph: Digraph, phi: Embedding) -> bool:
    if len(phi.forward) != tree.n or phi.host_size != graph.n:
        raise ValueError("embedding sizes do not match tree and graph")
    violations = embedding_violations(tree, graph, phi)
    image = phi.forward
    return not violations and len(np.unique(image)) == len(image)


def sample_uniform_injections(k: int, host: int, count: int, seed: SeedLike) -> np.ndarray:
    """``count`` independent uniform injections [k] -> [host] as rows.

    Row-wise Fisher-Yates stopped after ``k`` swaps.
    """
    if not 0 <= k <= host:
        raise ValueError(f"cannot inject {k} vertices into {host}")
    rng = as_generator(seed)
    perm = np.tile(np.arange(host, dtype=np.int64), (count, 1))
    rows = np.arange(count)
    for i in range(k):
        j = rng.integers(i, host, size=count)
        held = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = held
    return perm[:, :k]


def sample_uniform_injection(tree_size: int, host: int, seed: SeedLike) -> Embedding:
    row = sample_uniform_injections(tree_size, host, 1, seed)[0]
    emb = Embedding(tree_size, host)
    emb.forward[:] = row
    emb.inverse[row] = np.arange(tree_size)
    return emb


@dataclass(frozen=True)
class RetryPolicy:
    backtrack_budget: int = 10_000
    max_restarts: int = 20


class EmbeddingFailed(Exception):
    def __init__(self, depth: int, attempts: int):
        super().__init__(f"almost-embedding failed after {attempts} attempts (deepest prefix {depth} vertices)")
        self.depth = depth
        self.attempts = attempts


def _placement_plan(tree: OrientedTree, order: Sequence[int]) -> list[tuple[int, int, bool]]:
    """Vertices in the order the edges introduce them: (vertex, parent, out_edge).

    ``out_edge`` is True when the edge is parent -> vertex.  The root has parent -1.
    """
    if not order:
        return [(0, -1, True)]
    u, v = tree.edges[order[0]]
    if len(order) > 1 and v in tree.edges[order[1]] and u not in tree.edges[order[1]]:
        plan = [(v, -1, True), (u, v, False)]
    else:
        plan = [(u, -1, True), (v, u, True)]
    placed = {plan[0][0], plan[1][0]}
    for i in order[1:]:
        a, b = tree.edges[i]
        if a in placed and b not in placed:
            plan.append((b, a, True))
            placed.add(b)
        elif b in placed and a not in placed:
            plan.append((a, b, False))
            placed.add(a)
        else:
            raise ValueError("edge order is not a valid ordering")
    return plan


def embed_almost(
    tree: OrientedTree,
    order: Sequence[int],
    host: Digraph,
    seed: SeedLike,
    policy: RetryPolicy = RetryPolicy(),
) -> Embedding:
    """Embed ``tree`` into ``host`` along ``order`` using host edges only.

    Each new vertex goes to a uniformly random unused neighbour (in the right
    direction) of its parent's image.  On a dead end the search backjumps to
    the latest placement that occupies the parent's neighbourhood (conflict
    directed backjumping); undone placements are charged to the budget.  When
    the budget runs out, the attempt restarts from a fresh random root.
    """
    if tree.n > host.n:
        raise ValueError("tree larger than host")
    rng = as_generator(seed)
    plan = _placement_plan(tree, order)
    deepest = 0
    for attempt in range(policy.max_restarts + 1):
        result, depth = _attempt(tree, host, plan, rng, policy.backtrack_budget)
        deepest = max(deepest, depth)
        if result is not None:
            return result
    raise EmbeddingFailed(deepest, policy.max_restarts + 1)


def _attempt(tree, host, plan, rng, budget):
    m = len(plan)
    n = host.n
    pos_of_vertex = {v: i for i, (v, _, _) in enumerate(plan)}
    parent_pos = [pos_of_vertex[p] if p >= 0 else -1 for _, p, _ in plan]
    image = [-1] * m
    occupant = [-1] * n  # host vertex -> plan position
    tried: list[set[int]] = [set() for _ in range(m)]
    conflict: list[set[int]] = [set() for _ in range(m)]

    root = int(rng.integers(n))
    image[0] = root
    occupant[root] = 0
    pos = 1
    deepest = 1
    while pos < m:
        x = image[parent_pos[pos]]
        nbrs = host.out_neighbors(x) if plan[pos][2] else host.in_neighbors(x)
        bad = tried[pos]
        cands = [y for y in nbrs if occupant[y] < 0 and y not in bad]
        if cands:
            y = cands[int(rng.integers(len(cands)))] if len(cands) > 1 else cands[0]
            image[pos] = y
            occupant[y] = pos
            pos += 1
            deepest = max(deepest, pos)
            continue
        # dead end: who blocks this position?
        blockers = conflict[pos]
        blockers.add(parent_pos[pos])
        blockers.update(occupant[y] for y in nbrs if occupant[y] >= 0)
        blockers.discard(pos)
        target = max(blockers)
        cost = pos - target
        if target == 0 or cost > budget:
            return None, deepest
        budget -= cost
        carried = blockers - {target}
        for q in range(pos, target, -1):
            if q < pos:
                occupant[image[q]] = -1
                image[q] = -1
            tried[q].clear()
            conflict[q].clear()
        occupant[image[target]] = -1
        tried[target].add(image[target])
        image[target] = -1
        conflict[target] |= carried
        pos = target
    phi = Embedding(tree.n, n)
    for (v, _, _), y in zip(plan, image):
        phi.assign(v, y)
    return phi, deepest


def write_embedding(phi: Embedding, stream: TextIO) -> None:
    for t in phi.mapped():
        stream.write(f"{t} {phi[t]}\n")


def read_embedding(stream: TextIO, tree_size: int, host_size: int) -> Embedding:
    phi = Embedding(tree_size, host_size)
    for line in stream:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ValueError(f"bad embedding line {line!r}")
        phi.assign(int(parts[0]), int(parts[1]))
    return phi
