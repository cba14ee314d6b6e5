"""Star packing, absorbing stars, and absorption-based completion of an embedding.

A star is a tree vertex together with its full out- and in-neighbourhood.  A
star centred at ``v`` is ``(u, sign, w)``-absorbing under ``phi`` when
``phi(v)`` is a ``sign``-neighbour of ``u`` and the leaf images lie in the
matching neighbourhoods of ``w``; the free host vertex ``w`` can then take over
``v``'s role while ``phi(v)`` becomes the image of a new tree vertex hanging off
the tree vertex mapped to ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .digraph import Digraph
from .embedding import UNMAPPED, Embedding, embedding_violations
from .trees import OrientedTree

PLUS, MINUS = "+", "-"
SIGNS = (PLUS, MINUS)


@dataclass(frozen=True)
class Star:
    center: int
    s_plus: tuple[int, ...]
    s_minus: tuple[int, ...]

    @classmethod
    def full(cls, tree: OrientedTree, v: int) -> "Star":
        return cls(v, tree.out_neighbors(v), tree.in_neighbors(v))

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.center, *self.s_plus, *self.s_minus)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.s_plus), len(self.s_minus)


@dataclass
class StarPack:
    stars: list[Star]
    member_of: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.member_of:
            for k, st in enumerate(self.stars):
                for x in st.vertices:
                    if x in self.member_of:
                        raise ValueError(f"stars {self.member_of[x]} and {k} share vertex {x}")
                    self.member_of[x] = k
        self._by_center = {st.center: k for k, st in enumerate(self.stars)}

    def __len__(self) -> int:
        return len(self.stars)

    def index_of_center(self, v: int) -> int | None:
        return self._by_center.get(v)

    def truncated(self, size: int) -> "StarPack":
        return StarPack(self.stars[: max(0, size)])

    def relabeled(self, mapping: Sequence[int]) -> "StarPack":
        """Translate tree-vertex ids through ``mapping`` (e.g. subtree -> tree)."""
        return StarPack(
            [
                Star(mapping[s.center], tuple(mapping[x] for x in s.s_plus), tuple(mapping[x] for x in s.s_minus))
                for s in self.stars
            ]
        )


def greedy_star_pack(tree: OrientedTree) -> StarPack:
    """Scan vertices in ascending id, keep every full star disjoint from those kept."""
    covered: set[int] = set()
    stars = []
    for v in range(tree.n):
        star = Star.full(tree, v)
        if covered.isdisjoint(star.vertices):
            stars.append(star)
            covered.update(star.vertices)
    return StarPack(stars)


def _require_mapped(star: Star, phi: Embedding) -> None:
    for x in star.vertices:
        if phi.forward[x] == UNMAPPED:
            raise ValueError(f"star vertex {x} is not mapped")


def is_absorbing(star: Star, phi: Embedding, graph: Digraph, u: int, sign: str, w: int) -> bool:
    _require_mapped(star, phi)
    f = phi.forward
    c = int(f[star.center])
    if sign == PLUS:
        if not graph.has_edge(u, c):
            return False
    elif sign == MINUS:
        if not graph.has_edge(c, u):
            return False
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    out_w = graph.out_set(w)
    in_w = graph.in_set(w)
    return all(int(f[x]) in out_w for x in star.s_plus) and all(int(f[x]) in in_w for x in star.s_minus)


def count_absorbing(
    pack: StarPack,
    used: set[int] | frozenset[int],
    phi: Embedding,
    graph: Digraph,
    u: int,
    sign: str,
    w: int,
) -> int:
    return sum(
        1 for k, star in enumerate(pack.stars) if k not in used and is_absorbing(star, phi, graph, u, sign, w)
    )


def absorbing_count_matrices(
    pack: StarPack,
    phi: Embedding,
    graph: Digraph,
    used: set[int] | frozenset[int] = frozenset(),
) -> dict[str, np.ndarray]:
    """``{sign: C}`` with ``C[u, w]`` the number of unused (u, sign, w)-absorbing stars.

    Center conditions give a (stars x n) indicator per sign, leaf conditions a
    (stars x n) indicator over ``w``; one matrix product per sign sums them.
    """
    n = graph.n
    live = [k for k in range(len(pack)) if k not in used]
    if not live:
        zero = np.zeros((n, n), dtype=np.int64)
        return {PLUS: zero, MINUS: zero.copy()}
    adj = graph.adjacency_matrix()
    f = phi.forward
    for k in live:
        _require_mapped(pack.stars[k], phi)
    centers = f[[pack.stars[k].center for k in live]]
    leaf_ok = np.ones((len(live), n), dtype=bool)
    for row, k in enumerate(live):
        star = pack.stars[k]
        if star.s_plus:
            leaf_ok[row] &= adj[:, f[list(star.s_plus)]].all(axis=1)
        if star.s_minus:
            leaf_ok[row] &= adj[f[list(star.s_minus)], :].all(axis=0)
    leaves = leaf_ok.astype(np.float64)
    # PLUS needs u -> phi(center): column of adj; MINUS needs phi(center) -> u: row of adj
    center_plus = adj[:, centers].T.astype(np.float64)
    center_minus = adj[centers, :].astype(np.float64)
    return {
        PLUS: np.rint(center_plus.T @ leaves).astype(np.int64),
        MINUS: np.rint(center_minus.T @ leaves).astype(np.int64),
    }


@dataclass(frozen=True)
class AbsorbingMinimum:
    count: int
    triple: tuple[int, str, int]
    restricted_count: int | None = None
    restricted_triple: tuple[int, str, int] | None = None


def _argmin(mats: dict[str, np.ndarray], columns: Sequence[int] | None) -> tuple[int, tuple[int, str, int]]:
    best = None
    for sign in SIGNS:
        mat = mats[sign] if columns is None else mats[sign][:, columns]
        flat = int(np.argmin(mat))
        u, col = divmod(flat, mat.shape[1])
        w = col if columns is None else columns[col]
        value = int(mat[u, col])
        if best is None or value < best[0]:
            best = (value, (u, sign, int(w)))
    return best


def min_absorbing_over_triples(
    pack: StarPack,
    phi: Embedding,
    graph: Digraph,
    unembedded: Sequence[int] | None = None,
    used: set[int] | frozenset[int] = frozenset(),
) -> AbsorbingMinimum:
    """Minimum absorbing count over all (u, sign, w), plus the minimum over
    ``w`` restricted to ``unembedded`` when given.  Ties go to the smallest
    (sign, u, w) in row-major order, '+' first."""
    mats = absorbing_count_matrices(pack, phi, graph, used)
    count, triple = _argmin(mats, None)
    if unembedded is None or len(unembedded) == 0:
        return AbsorbingMinimum(count, triple)
    rcount, rtriple = _argmin(mats, sorted(unembedded))
    return AbsorbingMinimum(count, triple, rcount, rtriple)


def min_absorbing_naive(
    pack: StarPack, phi: Embedding, graph: Digraph, used: set[int] | frozenset[int] = frozenset()
) -> tuple[int, tuple[int, str, int]]:
    """Reference triple loop for testing the vectorised path."""
    best = None
    for sign in SIGNS:
        for u in range(graph.n):
            for w in range(graph.n):
                value = count_absorbing(pack, used, phi, graph, u, sign, w)
                if best is None or value < best[0]:
                    best = (value, (u, sign, w))
    return best


class CompletionFailed(Exception):
    def __init__(self, message: str, step: int | None = None, triple: tuple[int, str, int] | None = None,
                 remaining: int | None = None):
        super().__init__(message)
        self.step = step
        self.triple = triple
        self.remaining = remaining


@dataclass(frozen=True)
class AbsorptionStep:
    step: int
    edge: tuple[int, int]
    triple: tuple[int, str, int]
    star: int
    available: int
    retired: tuple[int, ...]


def complete_embedding(
    tree: OrientedTree,
    order: Sequence[int],
    phi0: Embedding,
    graph: Digraph,
    pack: StarPack,
    debug: bool = False,
    log: list[AbsorptionStep] | None = None,
) -> Embedding:
    """Extend an embedding of a prefix of ``order`` to all of ``tree`` by absorption.

    Free host vertices are consumed in ascending id.  Each step attaches the
    next edge's new endpoint through the first unused star (ascending index)
    that is absorbing for (image of the attached endpoint, edge direction,
    next free host vertex); that star's centre moves to the free vertex and
    the new tree vertex takes the centre's old image.  The chosen star and the
    star centred at the attached endpoint are retired.

    With ``debug`` the invariants of the induction are asserted after every step.
    """
    n = tree.n
    if graph.n != n or phi0.host_size != n or len(phi0.forward) != n:
        raise ValueError("tree, graph and embedding must all have n vertices")
    mapped = phi0.mapped()
    i = n - len(mapped)
    start = n - 1 - i
    if i == 0:
        return phi0.copy()
    prefix_vertices = {x for e in order[:start] for x in tree.edges[e]} if start else set(mapped[:1])
    if set(mapped) != prefix_vertices:
        raise ValueError("phi0 must map exactly the vertices of the ordering's prefix")
    prefix = [tree.edges[e] for e in order[:start]]
    f0 = phi0.forward
    bad = [(a, b) for a, b in prefix if not graph.has_edge(int(f0[a]), int(f0[b]))]
    if bad:
        raise ValueError(f"phi0 is not an embedding of the prefix; missing images of {bad[:5]}")
    for st in pack.stars:
        if any(x not in prefix_vertices for x in st.vertices):
            raise ValueError("pack stars must lie in the embedded prefix")

    phi = phi0.copy()
    free = phi.unused_hosts()
    if len(free) < i:
        raise CompletionFailed(f"only {len(free)} free host vertices for {i} missing tree vertices")
    initial_image = phi.image()
    used: set[int] = set()
    before = absorbing_count_matrices(pack, phi, graph) if debug else None

    for j in range(i):
        a, b = tree.edges[order[start + j]]
        x = free[j]
        if phi.is_mapped(a) and not phi.is_mapped(b):
            attach, new, sign = a, b, PLUS
        elif phi.is_mapped(b) and not phi.is_mapped(a):
            attach, new, sign = b, a, MINUS
        else:
            raise ValueError(f"edge ({a}, {b}) at step {j + 1} does not have exactly one embedded endpoint")
        u = phi[attach]
        chosen = None
        available = 0
        for k, star in enumerate(pack.stars):
            if k in used or not is_absorbing(star, phi, graph, u, sign, x):
                continue
            available += 1
            if chosen is None:
                chosen = k
        if chosen is None:
            raise CompletionFailed(
                f"no unused ({u}, {sign}, {x})-absorbing star at step {j + 1}",
                step=j + 1, triple=(u, sign, x), remaining=len(pack) - len(used),
            )
        center = pack.stars[chosen].center
        old = phi[center]
        phi.move(center, x)
        phi.assign(new, old)
        retired = {chosen}
        at_attach = pack.index_of_center(attach)
        if at_attach is not None:
            retired.add(at_attach)
        used |= retired
        if log is not None:
            log.append(AbsorptionStep(j + 1, (a, b), (u, sign, x), chosen, available, tuple(sorted(retired))))

        if debug:
            assert phi.image() == initial_image | set(free[: j + 1]), "image invariant broken"
            assert len(used) <= 2 * (j + 1), "too many retired stars"
            for e in order[: start + j + 1]:
                p, q = tree.edges[e]
                assert graph.has_edge(phi[p], phi[q]), f"edge ({p}, {q}) lost at step {j + 1}"
            after = absorbing_count_matrices(pack, phi, graph, used)
            for s in SIGNS:
                assert (after[s] >= before[s] - 2).all(), "absorbing count dropped by more than 2"
            before = after

    if embedding_violations(tree, graph, phi):
        raise AssertionError("completed map is not an embedding")
    return phi
