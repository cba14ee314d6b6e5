"""Directed graphs on dense integer vertex sets.

Every vertex keeps an out-set and an in-set (constant-time membership) and a
lazily built sorted neighbour tuple for deterministic iteration.  A boolean
adjacency matrix is cached on demand for the vectorised absorbing-star sweeps.
"""

from __future__ import annotations

from typing import Iterable, TextIO

import numpy as np


class Digraph:
    """Simple digraph on vertices ``0..n-1``; antiparallel pairs are allowed."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError("a digraph needs at least one vertex")
        self.n = int(n)
        self._out: list[set[int]] = [set() for _ in range(self.n)]
        self._in: list[set[int]] = [set() for _ in range(self.n)]
        self.edge_count = 0
        self._sorted_out: list[tuple[int, ...] | None] = [None] * self.n
        self._sorted_in: list[tuple[int, ...] | None] = [None] * self.n
        self._matrix: np.ndarray | None = None
        for u, v in edges:
            self.add_edge(u, v)

    # construction

    def add_edge(self, u: int, v: int) -> bool:
        """Insert ``u -> v``; return False if it was already present."""
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        if u == v:
            raise ValueError(f"self-loop at {u}")
        if v in self._out[u]:
            return False
        self._out[u].add(v)
        self._in[v].add(u)
        self.edge_count += 1
        self._sorted_out[u] = None
        self._sorted_in[v] = None
        self._matrix = None
        return True

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Digraph":
        m = np.asarray(matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if m.diagonal().any():
            raise ValueError("adjacency matrix has self-loops")
        us, vs = np.nonzero(m)
        return cls(m.shape[0], zip(us.tolist(), vs.tolist()))

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        return cls.from_matrix(~np.eye(n, dtype=bool))

    def copy(self) -> "Digraph":
        return Digraph(self.n, self.edges())

    def reverse(self) -> "Digraph":
        return Digraph(self.n, ((v, u) for u, v in self.edges()))

    # queries

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._out[u]

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        cached = self._sorted_out[v]
        if cached is None:
            cached = self._sorted_out[v] = tuple(sorted(self._out[v]))
        return cached

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        cached = self._sorted_in[v]
        if cached is None:
            cached = self._sorted_in[v] = tuple(sorted(self._in[v]))
        return cached

    def out_set(self, v: int) -> set[int]:
        return self._out[v]

    def in_set(self, v: int) -> set[int]:
        return self._in[v]

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def in_degree(self, v: int) -> int:
        return len(self._in[v])

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.out_neighbors(u)]

    def adjacency_matrix(self) -> np.ndarray:
        """Read-only boolean matrix with ``M[u, v]`` true iff ``u -> v``."""
        if self._matrix is None:
            m = np.zeros((self.n, self.n), dtype=bool)
            for u in range(self.n):
                if self._out[u]:
                    m[u, list(self._out[u])] = True
            m.flags.writeable = False
            self._matrix = m
        return self._matrix

    def check_invariants(self) -> None:
        """Raise AssertionError if the mirrored adjacency is inconsistent."""
        total_out = total_in = 0
        for v in range(self.n):
            assert v not in self._out[v], f"self-loop at {v}"
            for w in self._out[v]:
                assert v in self._in[w], f"({v}, {w}) missing from in-set"
            for w in self._in[v]:
                assert v in self._out[w], f"({w}, {v}) missing from out-set"
            total_out += len(self._out[v])
            total_in += len(self._in[v])
        assert total_out == total_in == self.edge_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self._out == other._out

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={self.edge_count})"


def min_semidegree(graph: Digraph) -> int:
    return min(min(graph.out_degree(v), graph.in_degree(v)) for v in range(graph.n))


def union(first: Digraph, second: Digraph) -> Digraph:
    if first.n != second.n:
        raise ValueError(f"vertex counts differ: {first.n} != {second.n}")
    result = first.copy()
    for u, v in second.edges():
        result.add_edge(u, v)
    return result


def write_edge_list(graph: Digraph, stream: TextIO) -> None:
    stream.write(f"digraph {graph.n} {graph.edge_count}\n")
    for u, v in graph.edges():
        stream.write(f"{u} {v}\n")


def read_edge_list(stream: TextIO) -> Digraph:
    header = stream.readline().split()
    if len(header) != 3 or header[0] != "digraph":
        raise ValueError("expected header 'digraph <n> <m>'")
    n, m = int(header[1]), int(header[2])
    graph = Digraph(n)
    for _ in range(m):
        parts = stream.readline().split()
        if len(parts) != 2:
            raise ValueError("truncated edge list")
        if not graph.add_edge(int(parts[0]), int(parts[1])):
            raise ValueError(f"duplicate edge {parts[0]} {parts[1]}")
    return graph
