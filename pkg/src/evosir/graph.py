"""Erdős–Rényi graphs with a mutable multigraph store.

Edges carry stable integer ids so that the simulator can attach event clocks
to individual (possibly parallel) edges. Rewiring keeps the id and moves one
endpoint; deletion retires the id.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphConsistencyError, ParameterError

RngLike = Union[None, int, np.random.Generator]


@dataclass
class ComponentSummary:
    component_sizes: List[int]
    giant_fraction: float


class EvolvingGraph:
    """Undirected multigraph on vertices ``0..n-1`` without self-loops."""

    def __init__(self, n: int):
        if n < 0:
            raise ParameterError(f"vertex count must be non-negative, got {n}")
        self.n = int(n)
        # endpoint lists indexed by edge id; -1 marks a retired id
        self._a: List[int] = []
        self._b: List[int] = []
        # insertion-ordered so that copies iterate identically
        self._inc: List[dict] = [{} for _ in range(self.n)]
        self.edge_count = 0

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Tuple[int, int]]) -> "EvolvingGraph":
        g = cls(n)
        for u, v in edges:
            g.add_edge(int(u), int(v))
        return g

    # -- queries ---------------------------------------------------------
    def neighbors(self, v: int) -> List[int]:
        """Neighbour multiset of ``v`` (a parallel edge contributes twice)."""
        a, b = self._a, self._b
        return [a[e] + b[e] - v for e in self._inc[v]]

    def degree(self, v: int) -> int:
        return len(self._inc[v])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self._inc), dtype=np.int64, count=self.n)

    def incident(self, v: int):
        """Live edge ids at ``v`` as a read-only view."""
        return self._inc[v].keys()

    def endpoints(self, e: int) -> Tuple[int, int]:
        return self._a[e], self._b[e]

    def other(self, e: int, v: int) -> int:
        return self._a[e] + self._b[e] - v

    def multiplicity(self, u: int, v: int) -> int:
        a, b = self._a, self._b
        return sum(1 for e in self._inc[u] if a[e] + b[e] - u == v)

    def has_edge(self, u: int, v: int) -> bool:
        return self.multiplicity(u, v) > 0

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Each live edge once as ``(min, max)``, in id order."""
        for a, b in zip(self._a, self._b):
            if a >= 0:
                yield (a, b) if a < b else (b, a)

    @property
    def capacity(self) -> int:
        """One past the largest edge id ever issued."""
        return len(self._a)

    # -- mutation --------------------------------------------------------
    def add_edge(self, u: int, v: int) -> int:
        if u == v:
            raise ParameterError(f"self-loop at {u} is not allowed")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ParameterError(f"edge ({u}, {v}) out of range for n={self.n}")
        e = len(self._a)
        self._a.append(u)
        self._b.append(v)
        self._inc[u][e] = None
        self._inc[v][e] = None
        self.edge_count += 1
        return e

    def _find(self, u: int, v: int) -> int:
        a, b = self._a, self._b
        for e in self._inc[u]:
            if a[e] + b[e] - u == v:
                return e
        raise GraphConsistencyError(f"edge ({u}, {v}) is not present")

    def delete_edge(self, u: int, v: int) -> None:
        """Remove one copy of the edge ``(u, v)``."""
        self.delete_edge_id(self._find(u, v))

    def delete_edge_id(self, e: int) -> None:
        a = self._a[e]
        if a < 0:
            raise GraphConsistencyError(f"edge id {e} already deleted")
        b = self._b[e]
        del self._inc[a][e]
        del self._inc[b][e]
        self._a[e] = self._b[e] = -1
        self.edge_count -= 1

    def move_endpoint(self, e: int, old: int, new: int) -> None:
        """Reattach the ``old`` end of edge ``e`` to ``new``, keeping the id."""
        a, b = self._a[e], self._b[e]
        if a == old:
            keep = b
            self._a[e] = new
        elif b == old:
            keep = a
            self._b[e] = new
        else:
            raise GraphConsistencyError(f"vertex {old} is not an endpoint of edge {e}")
        if new == keep:
            raise GraphConsistencyError(f"moving edge {e} to {new} would create a self-loop")
        del self._inc[old][e]
        self._inc[new][e] = None

    def rewire_endpoint(self, u: int, v: int, rng: random.Random) -> int:
        """Drop one copy of ``(u, v)`` and connect ``u`` to a uniform vertex ``w != u``.

        ``w`` may equal ``v`` or an existing neighbour of ``u``; parallel edges
        are kept. Returns ``w``.
        """
        e = self._find(u, v)
        w = rng.randrange(self.n - 1)
        if w >= u:
            w += 1
        self.move_endpoint(e, v, w)
        return w

    def copy(self) -> "EvolvingGraph":
        g = EvolvingGraph.__new__(EvolvingGraph)
        g.n = self.n
        g._a = list(self._a)
        g._b = list(self._b)
        g._inc = [dict(d) for d in self._inc]
        g.edge_count = self.edge_count
        return g

    # -- checks and export -----------------------------------------------
    def audit(self) -> None:
        """Verify symmetry, absence of self-loops and the edge count."""
        total = 0
        for v, inc in enumerate(self._inc):
            for e in inc:
                a, b = self._a[e], self._b[e]
                if a == b:
                    raise GraphConsistencyError(f"self-loop on edge {e}")
                if v not in (a, b):
                    raise GraphConsistencyError(f"vertex {v} lists edge {e} = ({a}, {b})")
                if e not in self._inc[a + b - v]:
                    raise GraphConsistencyError(f"edge {e} missing from {a + b - v}")
            total += len(inc)
        if total != 2 * self.edge_count:
            raise GraphConsistencyError(f"edge_count {self.edge_count} != {total} / 2")
        live = sum(1 for a in self._a if a >= 0)
        if live != self.edge_count:
            raise GraphConsistencyError(f"{live} live ids but edge_count {self.edge_count}")

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        a = np.asarray(self._a, dtype=np.int64)
        b = np.asarray(self._b, dtype=np.int64)
        live = a >= 0
        return a[live], b[live]

    def write_edgelist(self, path: Union[str, Path]) -> None:
        with open(path, "w") as fh:
            for u, v in self.edges():
                fh.write(f"{u} {v}\n")


def _pair_from_index(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map ``k`` in ``[0, n(n-1)/2)`` to the pair ``(i, j)``, ``j < i``."""
    i = np.floor((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) / 2.0).astype(np.int64)
    # float rounding can be off by one near perfect squares
    i -= (i * (i - 1) // 2) > k
    i += ((i + 1) * i // 2) <= k
    j = k - i * (i - 1) // 2
    return i, j


def generate_er(n: int, mu: float, rng: RngLike = None) -> EvolvingGraph:
    """Sample G(n, mu/n): every pair is joined independently with probability mu/n."""
    if n < 0:
        raise ParameterError(f"vertex count must be non-negative, got {n}")
    if mu < 0 or (n > 0 and mu > n - 1):
        raise ParameterError(f"mean degree must lie in [0, n-1], got {mu}")
    rng = np.random.default_rng(rng)
    g = EvolvingGraph(n)
    if n < 2 or mu == 0:
        return g
    pairs = n * (n - 1) // 2
    m = int(rng.binomial(pairs, mu / n))
    # a uniform m-subset of pairs, given a binomial edge count, is exactly G(n, p)
    idx = rng.choice(pairs, size=m, replace=False)
    idx.sort()
    i, j = _pair_from_index(idx)
    a, b, inc = g._a, g._b, g._inc
    a.extend(j.tolist())
    b.extend(i.tolist())
    for e, (u, v) in enumerate(zip(a, b)):
        inc[u][e] = None
        inc[v][e] = None
    g.edge_count = m
    return g


def rewire_endpoint(g: EvolvingGraph, u: int, v: int, rng: random.Random) -> int:
    """Move one copy of ``(u, v)`` so that ``u`` attaches to a uniform ``w != u``."""
    return g.rewire_endpoint(u, v, rng)


def delete_edge(g: EvolvingGraph, u: int, v: int) -> None:
    g.delete_edge(u, v)


def components(g: EvolvingGraph) -> ComponentSummary:
    """Connected components of the current multigraph."""
    if g.n == 0:
        return ComponentSummary([], 0.0)
    a, b = g.edge_arrays()
    adj = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(g.n, g.n))
    _, labels = connected_components(adj, directed=False)
    sizes = np.sort(np.bincount(labels))[::-1]
    return ComponentSummary(sizes.tolist(), float(sizes[0]) / g.n)
