"""Centralized ground truth for the distributed algorithms.

Distances come from Floyd-Warshall on a dense matrix, deliberately a
different code path from the Dijkstra in :mod:`congest_mrct.graph`.  Routing
costs always count ordered pairs: ``RC_S(H) = sum over u, v in S of d_H(u, v)``.
"""
from __future__ import annotations

import heapq
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import GraphError, OracleBudgetExceeded
from .graph import Graph, TerminalSet

_INF = np.iinfo(np.int64).max // 4

ENUM_MAX_N = 9
ENUM_MAX_M = 14


class DistanceMatrix:
    """All-pairs distances, indexed with 1-based node IDs."""

    def __init__(self, d: np.ndarray):
        self.d = d

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __call__(self, u: int, v: int) -> int:
        return int(self.d[u - 1, v - 1])

    def row(self, u: int) -> dict[int, int]:
        return {v + 1: int(x) for v, x in enumerate(self.d[u - 1])}


def apsp(g: Graph | tuple[int, Iterable[tuple[int, int, int]]]) -> DistanceMatrix:
    """Floyd-Warshall over edge delays.

    Accepts a :class:`Graph` or a raw ``(n, edges)`` pair, so a tree given as an
    edge set can be measured without building a ``Graph`` first.
    """
    if isinstance(g, Graph):
        n, edges = g.n, list(g.edges())
    else:
        n, edges = g[0], list(g[1])
    d = np.full((n, n), _INF, dtype=np.int64)
    np.fill_diagonal(d, 0)
    for u, v, w in edges:
        if w < d[u - 1, v - 1]:
            d[u - 1, v - 1] = d[v - 1, u - 1] = w
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    if (d >= _INF).any():
        raise GraphError("distance oracle: input is not connected")
    return DistanceMatrix(d)


def rc_exact(h, terminals: TerminalSet | Iterable[int]) -> int:
    """Routing cost of ``h`` (a Graph or ``(n, edges)``) over ordered terminal pairs."""
    idx = np.array(sorted(set(terminals))) - 1
    d = apsp(h).d
    return int(d[np.ix_(idx, idx)].sum())


def ssrc_exact(g: Graph, terminals: TerminalSet | Iterable[int], v: int) -> int:
    """``SSRC_S(v)``: the sum of distances from ``v`` to every terminal."""
    row = apsp(g).d[v - 1]
    return int(sum(row[u - 1] for u in set(terminals)))


def all_ssrc(g: Graph, terminals: TerminalSet | Iterable[int]) -> dict[int, int]:
    ts = sorted(set(terminals))
    d = apsp(g).d
    idx = np.array(ts) - 1
    sums = d[np.ix_(idx, idx)].sum(axis=1)
    return {v: int(s) for v, s in zip(ts, sums)}


def bfs_tree_reference(g: Graph, v: int) -> dict[int, int | None]:
    """Shortest-path tree rooted at ``v``; among equally short parents the smaller ID wins."""
    dist = {v: 0}
    heap = [(0, v)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for x, w in g.neighbors(u):
            if d + w < dist.get(x, _INF):
                dist[x] = d + w
                heapq.heappush(heap, (d + w, x))
    parent: dict[int, int | None] = {v: None}
    for u in g.nodes:
        if u != v:
            parent[u] = min(p for p, w in g.neighbors(u) if dist[p] + w == dist[u])
    return parent


# --------------------------------------------------------------------------
# exact S-MRCT by enumeration


def _find(uf, x):
    while uf[x] != x:
        uf[x] = uf[uf[x]]
        x = uf[x]
    return x


def spanning_trees(g: Graph) -> Iterator[list[tuple[int, int, int]]]:
    """Yield every spanning tree of ``g`` as a list of ``(u, v, w)`` edges.

    Include/exclude backtracking over the sorted edge list; a union-find
    snapshot per level rejects cycles, and branches that cannot reach
    ``n - 1`` edges anymore are cut.
    """
    edges = list(g.edges())
    need = g.n - 1
    chosen: list[tuple[int, int, int]] = []

    def rec(k, uf):
        if len(chosen) == need:
            yield list(chosen)
            return
        if len(edges) - k < need - len(chosen):
            return
        u, v, w = edges[k]
        ru, rv = _find(uf, u), _find(uf, v)
        if ru != rv:
            uf2 = list(uf)
            uf2[ru] = rv
            chosen.append(edges[k])
            yield from rec(k + 1, uf2)
            chosen.pop()
        yield from rec(k + 1, uf)

    if g.n == 1:
        yield []
        return
    yield from rec(0, list(range(g.n + 1)))


def tree_rc(n: int, tree: Sequence[tuple[int, int, int]], terminals: Iterable[int]) -> int:
    """RC_S of a spanning tree via edge cuts: each edge is crossed by
    ``2 * below * (|S| - below)`` ordered terminal pairs."""
    ts = set(terminals)
    adj: dict[int, list[tuple[int, int]]] = {u: [] for u in range(1, n + 1)}
    for u, v, w in tree:
        adj[u].append((v, w))
        adj[v].append((u, w))
    order, up = [1], {1: (None, 0)}
    for u in order:
        for x, w in adj[u]:
            if x not in up:
                up[x] = (u, w)
                order.append(x)
    below = {u: int(u in ts) for u in order}
    total = 0
    for u in reversed(order[1:]):
        p, w = up[u]
        total += 2 * w * below[u] * (len(ts) - below[u])
        below[p] += below[u]
    return total


def mrct_exact(g: Graph, terminals: TerminalSet | Iterable[int]) -> tuple[list[tuple[int, int, int]], int]:
    """Minimum routing cost spanning tree over ``terminals`` by exhaustive search.

    Only for small inputs: ``n <= 9`` or ``m <= 14``.  Ties keep the first tree
    in enumeration order.
    """
    if g.n > ENUM_MAX_N and g.m > ENUM_MAX_M:
        raise OracleBudgetExceeded(
            f"exact MRCT needs n <= {ENUM_MAX_N} or m <= {ENUM_MAX_M}, got n={g.n}, m={g.m}")
    ts = sorted(set(terminals))
    best, best_cost = None, None
    for tree in spanning_trees(g):
        c = tree_rc(g.n, tree, ts)
        if best_cost is None or c < best_cost:
            best, best_cost = tree, c
    return best, best_cost
