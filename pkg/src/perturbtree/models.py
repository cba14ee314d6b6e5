"""Random digraph models and dense base digraphs."""

from __future__ import annotations

import math

import numpy as np

from .digraph import Digraph, min_semidegree, union
from .seeding import SeedLike, as_generator

BASE_STYLES = ("doubled-bipartite", "blown-cycle", "random-repair")

# Above this many ordered pairs, sparse samples switch to geometric skipping.
NAIVE_PAIR_LIMIT = 4_000_000
SKIP_BELOW_P = 0.05


def ceil_fraction(x: float) -> int:
    """``ceil`` that ignores float noise such as 0.3 * 10 = 3.0000000000000004."""
    return math.ceil(x - 1e-9)


def floor_fraction(x: float) -> int:
    return math.floor(x + 1e-9)


def _ordered_pair(index: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    u = index // (n - 1)
    v = index % (n - 1)
    return u, v + (v >= u)


def sample_binomial_digraph(n: int, p: float, seed: SeedLike) -> Digraph:
    """D(n, p): every ordered pair u != v is an edge independently with prob. p.

    Pair ``u*(n-1) + v'`` is decided by the matching draw of the Philox stream,
    so for a fixed seed the samples are nested in ``p``.  Very large sparse
    instances use geometric gap skipping instead.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = as_generator(seed)
    pairs = n * (n - 1)
    if pairs == 0 or p == 0.0:
        return Digraph(n)
    if pairs > NAIVE_PAIR_LIMIT and p < SKIP_BELOW_P:
        index = _geometric_indices(pairs, p, rng)
    else:
        index = np.flatnonzero(rng.random(pairs) < p)
    u, v = _ordered_pair(index, n)
    return Digraph(n, zip(u.tolist(), v.tolist()))


def _geometric_indices(pairs: int, p: float, rng: np.random.Generator) -> np.ndarray:
    chunks = []
    pos = -1
    batch = max(16, int(pairs * p * 1.1) + 64)
    while True:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps)
        keep = idx[idx < pairs]
        chunks.append(keep)
        if len(keep) < len(idx):
            break
        pos = int(idx[-1])
    return np.concatenate(chunks)


def sample_mirrored_digraph(n: int, p: float, seed: SeedLike) -> Digraph:
    """D*(n, p): each antiparallel pair is present together with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = as_generator(seed)
    us, vs = np.triu_indices(n, k=1)
    keep = rng.random(len(us)) < p
    us, vs = us[keep].tolist(), vs[keep].tolist()
    graph = Digraph(n)
    for u, v in zip(us, vs):
        graph.add_edge(u, v)
        graph.add_edge(v, u)
    return graph


def doubled_complete_bipartite(a: int, b: int) -> Digraph:
    """K_{a,b} with every edge replaced by both orientations; parts {0..a-1}, {a..a+b-1}."""
    if a < 1 or b < 1:
        raise ValueError("both parts must be nonempty")
    m = np.zeros((a + b, a + b), dtype=bool)
    m[:a, a:] = True
    m[a:, :a] = True
    return Digraph.from_matrix(m)


def dense_base(n: int, alpha: float, style: str, seed: SeedLike = 0) -> Digraph:
    """A digraph on ``n`` vertices with minimum semidegree >= ceil(alpha * n)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    need = ceil_fraction(alpha * n)
    if need > n - 1:
        raise ValueError(f"semidegree {need} impossible on {n} vertices")
    if style == "doubled-bipartite":
        if need > n - need:
            raise ValueError(f"doubled-bipartite cannot reach semidegree {need} on {n} vertices")
        graph = doubled_complete_bipartite(need, n - need)
    elif style == "blown-cycle":
        graph = _blown_cycle(n, need)
    elif style == "random-repair":
        graph = _random_repair(n, alpha, need, as_generator(seed))
    else:
        raise ValueError(f"unknown base style {style!r}; choose from {BASE_STYLES}")
    if min_semidegree(graph) < need:
        raise ValueError(f"{style} base on {n} vertices misses semidegree {need}")
    return graph


def _blown_cycle(n: int, need: int) -> Digraph:
    # blobs of size ceil(need/3) around a directed cycle; every vertex points
    # to all vertices of the next three blobs, the last blob absorbs the filler
    size = max(1, math.ceil(need / 3))
    k = max(1, n // size)
    blob = np.minimum(np.arange(n) // size, k - 1)
    step = (blob[None, :] - blob[:, None]) % k
    m = (step >= 1) & (step <= 3) if k >= 4 else (step != 0)
    if k < 4 and need > n - np.bincount(blob).max():
        m = ~np.eye(n, dtype=bool)
    np.fill_diagonal(m, False)
    return Digraph.from_matrix(m)


def _random_repair(n: int, alpha: float, need: int, rng: np.random.Generator) -> Digraph:
    graph = sample_binomial_digraph(n, min(1.0, 3 * alpha), rng)
    for v in range(n):
        while graph.out_degree(v) < need:
            free = [w for w in range(n) if w != v and not graph.has_edge(v, w)]
            graph.add_edge(v, free[int(rng.integers(len(free)))])
        while graph.in_degree(v) < need:
            free = [w for w in range(n) if w != v and not graph.has_edge(w, v)]
            graph.add_edge(free[int(rng.integers(len(free)))], v)
    return graph


def perturb(base: Digraph, c: float, seed: SeedLike) -> tuple[Digraph, Digraph]:
    """Return ``(base ∪ R, R)`` with ``R ~ D(n, c/n)``."""
    n = base.n
    if c < 0 or c / n > 1:
        raise ValueError(f"c={c} gives edge probability outside [0, 1] for n={n}")
    random_part = sample_binomial_digraph(n, c / n, seed)
    return union(base, random_part), random_part
