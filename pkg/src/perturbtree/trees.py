"""Oriented trees, valid edge orderings, prefix subtrees and tree generators."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, TextIO

import numpy as np

from .seeding import as_generator

FAMILIES = ("directed-path", "anti-directed-path", "out-spider", "binary-out-tree", "caterpillar")


@dataclass(frozen=True)
class OrientedTree:
    """An orientation of a labelled tree on ``0..n-1``; edges are (tail, head)."""

    n: int
    edges: tuple[tuple[int, int], ...]
    _out: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _in: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 1:
            raise ValueError("a tree needs at least one vertex")
        if len(edges) != self.n - 1:
            raise ValueError(f"a tree on {self.n} vertices has {self.n - 1} edges, got {len(edges)}")
        out: list[list[int]] = [[] for _ in range(self.n)]
        inn: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise ValueError(f"bad tree edge ({u}, {v})")
            out[u].append(v)
            inn[v].append(u)
        object.__setattr__(self, "_out", tuple(tuple(sorted(x)) for x in out))
        object.__setattr__(self, "_in", tuple(tuple(sorted(x)) for x in inn))
        # connectivity of the underlying graph
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in self._out[v] + self._in[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != self.n:
            raise ValueError("underlying graph is not connected")

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(self._out[v] + self._in[v]))

    def degree(self, v: int) -> int:
        return len(self._out[v]) + len(self._in[v])

    @property
    def max_total_degree(self) -> int:
        return max(self.degree(v) for v in range(self.n))

    def underlying(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(u, v), max(u, v)) for u, v in self.edges)

    def center(self) -> int:
        """A vertex of minimum eccentricity (leaf stripping)."""
        if self.n <= 2:
            return 0
        deg = [self.degree(v) for v in range(self.n)]
        layer = [v for v in range(self.n) if deg[v] == 1]
        remaining = self.n
        while remaining > 2:
            remaining -= len(layer)
            nxt = []
            for v in layer:
                for w in self.neighbors(v):
                    deg[w] -= 1
                    if deg[w] == 1:
                        nxt.append(w)
            layer = nxt
        return min(layer)


EdgeOrdering = tuple[int, ...]


def valid_ordering(tree: OrientedTree, root: int = 0) -> EdgeOrdering:
    """Breadth-first edge order from ``root``, children in ascending id."""
    if not 0 <= root < tree.n:
        raise ValueError(f"root {root} out of range")
    index = {}
    for i, (u, v) in enumerate(tree.edges):
        index[(u, v)] = index[(v, u)] = i
    order = []
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in tree.neighbors(v):
            if w not in seen:
                seen.add(w)
                order.append(index[(v, w)])
                queue.append(w)
    return tuple(order)


def check_ordering(tree: OrientedTree, order: Sequence[int]) -> bool:
    if sorted(order) != list(range(tree.n - 1)):
        raise ValueError("ordering is not a permutation of the tree's edges")
    if not order:
        return True
    covered = set(tree.edges[order[0]])
    for i in order[1:]:
        u, v = tree.edges[i]
        if (u in covered) + (v in covered) != 1:
            return False
        covered.update((u, v))
    return True


def prefix_subtree(tree: OrientedTree, order: Sequence[int], k: int) -> tuple[OrientedTree, tuple[int, ...]]:
    """Tree spanned by the first ``k`` edges of ``order``.

    Sub-vertex ids are assigned in ascending original id, and the edges of the
    result are listed in ``order``, so ``range(k)`` is a valid ordering of it.
    Returns the subtree and the map from sub ids to original ids.
    """
    if not 1 <= k <= tree.n - 1:
        raise ValueError(f"prefix length {k} out of range 1..{tree.n - 1}")
    prefix = [tree.edges[i] for i in order[:k]]
    originals = tuple(sorted({x for e in prefix for x in e}))
    if len(originals) != k + 1:
        raise ValueError("ordering prefix is not a tree")
    relabel = {v: i for i, v in enumerate(originals)}
    sub = OrientedTree(k + 1, tuple((relabel[u], relabel[v]) for u, v in prefix))
    return sub, originals


@lru_cache(maxsize=64)
def _log_weight_table(n: int, cap: int) -> np.ndarray:
    """``W[r, s]`` = log of the sum over multiplicity vectors of r vertices with
    total s and entries <= cap of prod 1/m!  (Prüfer sequences with those
    letter counts number (n-2)!/prod m!)."""
    length = n - 2
    log_inv_fact = -np.array([math.lgamma(m + 1) for m in range(cap + 1)])
    table = np.full((n + 1, length + 1), -np.inf)
    table[0, 0] = 0.0
    for r in range(1, n + 1):
        terms = np.full((cap + 1, length + 1), -np.inf)
        for m in range(cap + 1):
            terms[m, m:] = log_inv_fact[m] + table[r - 1, : length + 1 - m]
        top = terms.max(axis=0)
        finite = np.isfinite(top)
        out = np.full(length + 1, -np.inf)
        out[finite] = top[finite] + np.log(np.exp(terms[:, finite] - top[finite]).sum(axis=0))
        table[r] = out
    table.flags.writeable = False
    return table


@lru_cache(maxsize=8)
def _count_cdf(n: int, cap: int) -> list[list[list[float]]]:
    """``cdf[r][s]``: cumulative law of the current letter's count when r letters
    (this one included) remain to receive a total of s."""
    table = _log_weight_table(n, cap)
    log_inv_fact = [-math.lgamma(m + 1) for m in range(cap + 1)]
    cdf = [[[] for _ in range(n - 1)] for _ in range(n + 1)]
    for r in range(1, n + 1):
        for s in range(n - 1):
            if not np.isfinite(table[r, s]):
                continue
            acc = 0.0
            row = []
            for m in range(min(cap, s) + 1):
                acc += math.exp(log_inv_fact[m] + table[r - 1, s - m] - table[r, s])
                row.append(acc)
            cdf[r][s] = row
    return cdf


def _capped_pruefer(n: int, max_degree: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform Prüfer sequence conditioned on every letter occurring at most
    ``max_degree - 1`` times: letter counts drawn exactly from their conditional
    law, then a uniform arrangement of the multiset."""
    cdf = _count_cdf(n, max_degree - 1)
    remaining = n - 2
    counts = [0] * n
    uniforms = rng.random(n).tolist()
    for v in range(n):
        if remaining == 0:
            break
        row = cdf[n - v][remaining]
        target = uniforms[v] * row[-1]
        m = 0
        while m < len(row) - 1 and row[m] <= target:
            m += 1
        counts[v] = m
        remaining -= m
    return rng.permutation(np.repeat(np.arange(n), counts))


def _decode_pruefer(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, int(x))
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def random_tree(n: int, max_degree: int, seed: int | np.random.Generator) -> OrientedTree:
    """Uniform labelled tree with maximum degree <= ``max_degree``, each edge
    oriented independently and uniformly."""
    if n < 2:
        raise ValueError("random_tree needs n >= 2")
    if max_degree < 1 or (n >= 3 and max_degree < 2):
        raise ValueError(f"no tree on {n} vertices has maximum degree <= {max_degree}")
    rng = as_generator(seed)
    seq = _capped_pruefer(n, max_degree, rng) if n > 2 else np.zeros(0, dtype=np.int64)
    edges = _decode_pruefer(seq.tolist(), n)
    flips = rng.random(n - 1) < 0.5
    return OrientedTree(n, tuple((v, u) if f else (u, v) for (u, v), f in zip(edges, flips)))


def family_tree(kind: str, n: int, legs: int = 3) -> OrientedTree:
    """Deterministic stress families.

    ``out-spider`` has ``legs`` directed legs of equal length out of vertex 0;
    ``caterpillar`` is a directed spine 0..n/2-1 with one out-leaf per spine vertex.
    """
    if n < 2:
        raise ValueError("family trees need n >= 2")
    if kind == "directed-path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "anti-directed-path":
        edges = [(i, i + 1) if i % 2 == 0 else (i + 1, i) for i in range(n - 1)]
    elif kind == "out-spider":
        if (n - 1) % legs:
            raise ValueError(f"out-spider with {legs} legs needs n = 1 mod {legs}")
        length = (n - 1) // legs
        edges = []
        for leg in range(legs):
            prev = 0
            for step in range(length):
                v = 1 + leg * length + step
                edges.append((prev, v))
                prev = v
    elif kind == "binary-out-tree":
        edges = [((v - 1) // 2, v) for v in range(1, n)]
    elif kind == "caterpillar":
        if n % 2:
            raise ValueError("caterpillar needs even n")
        half = n // 2
        edges = [(i, i + 1) for i in range(half - 1)] + [(i, half + i) for i in range(half)]
    else:
        raise ValueError(f"unknown tree family {kind!r}; choose from {FAMILIES}")
    return OrientedTree(n, tuple(edges))


def write_tree(tree: OrientedTree, stream: TextIO) -> None:
    stream.write(f"tree {tree.n}\n")
    for u, v in tree.edges:
        stream.write(f"{u} {v}\n")


def read_tree(stream: TextIO) -> OrientedTree:
    header = stream.readline().split()
    if len(header) != 2 or header[0] != "tree":
        raise ValueError("expected header 'tree <n>'")
    n = int(header[1])
    edges = []
    for _ in range(n - 1):
        parts = stream.readline().split()
        if len(parts) != 2:
            raise ValueError("truncated tree file")
        edges.append((int(parts[0]), int(parts[1])))
    return OrientedTree(n, tuple(edges))


def format_ordering(order: Sequence[int]) -> str:
    return " ".join(str(i) for i in order) + "\n"


def parse_ordering(text: str) -> EdgeOrdering:
    return tuple(int(x) for x in text.split())
