"""Undirected graphs with positive integer edge delays.

Nodes are the integers ``1..n``.  Every edge carries a delay ``w >= 1``: the
number of time slots a message needs to traverse it.  Uniform delay 1 is the
unweighted case.  Graphs are immutable after construction and always
connected.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .errors import GenerationError, GraphError, GraphParseError, InvalidTerminalSet

KINDS = ("clique", "path", "cycle", "star", "grid", "tree", "random_connected")


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph on nodes ``1..n``.

    ``adjacency[u]`` lists ``(neighbor, delay)`` pairs in ascending neighbor
    order; the position in that list is the local edge index used by node
    programs ("neighbor i").
    """

    n: int
    adjacency: dict[int, tuple[tuple[int, int], ...]] = field(repr=False)
    delays: dict[tuple[int, int], int] = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, int]]) -> "Graph":
        if n < 1:
            raise GraphError(f"node count must be positive, got {n}")
        delays: dict[tuple[int, int], int] = {}
        for u, v, w in edges:
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphError(f"edge ({u}, {v}) has an endpoint outside 1..{n}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if int(w) != w or w < 1:
                raise GraphError(f"edge ({u}, {v}): delay must be >= 1, got {w}")
            k = _key(u, v)
            if k in delays:
                raise GraphError(f"duplicate edge ({k[0]}, {k[1]})")
            delays[k] = int(w)
        adj: dict[int, list[tuple[int, int]]] = {u: [] for u in range(1, n + 1)}
        for (u, v), w in delays.items():
            adj[u].append((v, w))
            adj[v].append((u, w))
        adjacency = {u: tuple(sorted(nb)) for u, nb in adj.items()}
        g = cls(n=n, adjacency=adjacency, delays=dict(sorted(delays.items())))
        if not g._connected():
            raise GraphError("graph is not connected")
        return g

    def _connected(self) -> bool:
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for v, _ in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    @property
    def m(self) -> int:
        return len(self.delays)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield ``(u, v, delay)`` once per edge with ``u < v``, sorted."""
        for (u, v), w in self.delays.items():
            yield u, v, w

    def neighbors(self, u: int) -> tuple[tuple[int, int], ...]:
        return self.adjacency[u]

    @cached_property
    def _index(self) -> dict[tuple[int, int], int]:
        return {(u, v): i for u, nb in self.adjacency.items() for i, (v, _) in enumerate(nb)}

    def edge_index(self, u: int, v: int) -> int:
        """Position of ``v`` in ``u``'s adjacency list."""
        return self._index[(u, v)]

    def delay(self, u: int, v: int) -> int:
        return self.delays[_key(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return _key(u, v) in self.delays

    def is_tree(self) -> bool:
        return self.m == self.n - 1

    @property
    def unit_delays(self) -> bool:
        return all(w == 1 for w in self.delays.values())

    def subgraph(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Spanning subgraph on the same node set using the given edges."""
        return Graph.from_edges(self.n, [(u, v, self.delay(u, v)) for u, v in edges])


class TerminalSet:
    """A subset ``S`` of the nodes with at least two members."""

    __slots__ = ("members", "_set")

    def __init__(self, g: Graph, members: Iterable[int]):
        ms = tuple(sorted(set(members)))
        bad = [v for v in ms if not 1 <= v <= g.n]
        if bad:
            raise InvalidTerminalSet(f"terminal(s) {bad} are not nodes of the graph")
        if len(ms) < 2:
            raise InvalidTerminalSet(f"need at least 2 terminals, got {len(ms)}")
        self.members = ms
        self._set = frozenset(ms)

    @classmethod
    def all_nodes(cls, g: Graph) -> "TerminalSet":
        return cls(g, g.nodes)

    def __contains__(self, v: object) -> bool:
        return v in self._set

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TerminalSet) and self.members == other.members

    def __hash__(self) -> int:
        return hash(self.members)

    def __repr__(self) -> str:
        return f"TerminalSet({list(self.members)})"


# --------------------------------------------------------------------------
# generators


def _draw_delays(rng: np.random.Generator, pairs, max_delay: int):
    ws = rng.integers(1, max_delay + 1, size=len(pairs))
    return [(u, v, int(w)) for (u, v), w in zip(pairs, ws)]


# Small sparse cases (G(3, 0.15) is connected ~6% of the time) need many redraws.
MAX_DRAWS = 1000


def generate(kind: str, n: int, p: float = 0.5, seed: int = 0, max_delay: int = 1) -> Graph:
    """Build a connected graph of the given kind.

    ``random_connected`` samples G(n, p) and redraws from a fresh seed-derived
    stream until the sample is connected, giving up after ``MAX_DRAWS`` draws.
    Delays are uniform on ``1..max_delay``.
    """
    if n < 2:
        raise GraphError(f"invalid size n={n}: need n >= 2")
    if max_delay < 1:
        raise GraphError(f"max_delay must be >= 1, got {max_delay}")
    if kind not in KINDS:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of {KINDS}")

    if kind == "random_connected":
        if not 0 < p <= 1:
            raise GraphError(f"edge probability must be in (0, 1], got {p}")
        iu = np.triu_indices(n, k=1)
        for attempt in range(MAX_DRAWS):
            rng = np.random.default_rng([seed, attempt])
            keep = rng.random(len(iu[0])) < p
            pairs = [(int(a) + 1, int(b) + 1) for a, b in zip(iu[0][keep], iu[1][keep])]
            try:
                return Graph.from_edges(n, _draw_delays(rng, pairs, max_delay))
            except GraphError:
                continue
        raise GenerationError(f"no connected G({n}, {p}) sample in {MAX_DRAWS} attempts (seed={seed})")

    rng = np.random.default_rng([seed])
    if kind == "clique":
        pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    elif kind == "path":
        pairs = [(u, u + 1) for u in range(1, n)]
    elif kind == "cycle":
        pairs = [(u, u + 1) for u in range(1, n)] + ([(1, n)] if n > 2 else [])
    elif kind == "star":
        pairs = [(1, v) for v in range(2, n + 1)]
    elif kind == "grid":
        cols = math.ceil(math.sqrt(n))
        pairs = []
        for u in range(1, n + 1):
            r, c = divmod(u - 1, cols)
            if c + 1 < cols and u + 1 <= n:
                pairs.append((u, u + 1))
            if u + cols <= n:
                pairs.append((u, u + cols))
    else:  # tree: every node attaches to a uniformly chosen earlier node
        pairs = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    return Graph.from_edges(n, _draw_delays(rng, pairs, max_delay))


# --------------------------------------------------------------------------
# edge-list text format


def load_edge_list(text: str) -> Graph:
    """Parse ``n`` on the first line, then one ``u v w`` line per edge.

    Blank lines and ``#`` comments are ignored.
    """
    n = None
    edges: list[tuple[int, int, int]] = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise GraphParseError(lineno, f"expected integers, got {line!r}") from None
        if n is None:
            if len(nums) != 1:
                raise GraphParseError(lineno, "first line must hold the node count only")
            n = nums[0]
            if n < 1:
                raise GraphParseError(lineno, f"node count must be positive, got {n}")
            continue
        if len(nums) != 3:
            raise GraphParseError(lineno, f"expected 'u v w', got {line!r}")
        u, v, w = nums
        if not (1 <= u <= n and 1 <= v <= n) or u == v:
            raise GraphParseError(lineno, f"bad endpoints ({u}, {v}) for n={n}")
        if w < 1:
            raise GraphParseError(lineno, f"delay must be >= 1, got {w}")
        k = _key(u, v)
        if k in seen:
            raise GraphParseError(lineno, f"duplicate edge ({k[0]}, {k[1]}) (first on line {seen[k]})")
        seen[k] = lineno
        edges.append((u, v, w))
    if n is None:
        raise GraphParseError(0, "empty input")
    return Graph.from_edges(n, edges)


def save_edge_list(g: Graph) -> str:
    lines = [str(g.n)] + [f"{u} {v} {w}" for u, v, w in g.edges()]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# distances


def distances_from(g: Graph, source: int) -> dict[int, int]:
    """Single-source shortest path distances over edge delays (Dijkstra)."""
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in g.adjacency[u]:
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def eccentricity(g: Graph, u: int) -> int:
    if u not in g.adjacency:
        raise GraphError(f"node {u} not in graph")
    return max(distances_from(g, u).values())


def diameter(g: Graph) -> int:
    """Weighted diameter: the largest eccentricity."""
    return max(eccentricity(g, u) for u in g.nodes)
