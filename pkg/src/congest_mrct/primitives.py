"""Broadcast and convergecast on top of the round engine.

Arrival times are reported in the algorithms' slot convention: the source
sends in slot 1 and a message delivered in engine slot ``t`` arrived in slot
``t - 1``, so a node at weighted distance ``d`` from the source "receives at
slot d".
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import StructuralError
from .graph import Graph
from .sim import ExecutionReport, NodeProgram, RoundEngine

Parents = Mapping[int, int | None]


def validate_tree(g: Graph, parent: Parents) -> int:
    """Check that ``parent`` describes a spanning tree of ``g``; return its root."""
    if set(parent) != set(g.nodes):
        raise StructuralError("parent mapping must cover every node exactly once")
    roots = [u for u, p in parent.items() if p is None]
    if len(roots) != 1:
        raise StructuralError(f"expected exactly one root, found {roots}")
    for u, p in parent.items():
        if p is not None and not g.has_edge(u, p):
            raise StructuralError(f"parent edge ({u}, {p}) is not in the graph")
    state: dict[int, int] = {}  # 1 = on current path, 2 = reaches root
    for start in parent:
        path = []
        u = start
        while u is not None and state.get(u) != 2:
            if state.get(u) == 1:
                raise StructuralError(f"parent mapping has a cycle through node {u}")
            state[u] = 1
            path.append(u)
            u = parent[u]
        for x in path:
            state[x] = 2
    return roots[0]


def children_of(parent: Parents) -> dict[int, list[int]]:
    kids: dict[int, list[int]] = {u: [] for u in parent}
    for u, p in parent.items():
        if p is not None:
            kids[p].append(u)
    for k in kids.values():
        k.sort()
    return kids


def tree_depth(g: Graph, parent: Parents) -> int:
    """Largest delay-weighted distance from the root along tree edges."""
    depth: dict[int, int] = {}

    def d(u):
        if u not in depth:
            p = parent[u]
            depth[u] = 0 if p is None else d(p) + g.delay(u, p)
        return depth[u]

    return max(d(u) for u in parent)


# --------------------------------------------------------------------------
# broadcast


class _FloodProgram(NodeProgram):
    def __init__(self, node, neighbors, value=None):
        super().__init__(node, neighbors)
        self.value = value
        self.arrival = 0 if value is not None else None

    def step(self, t, inbox):
        if self.arrival is not None and t > 1:
            self.halted = True
            return ()
        if self.value is None:
            if not inbox:
                return ()
            self.value = inbox[min(inbox)][0]
            self.arrival = t - 1
        self.halted = True
        return [(i, (self.value,)) for i in range(self.degree) if i not in inbox]


class _TreeCastProgram(NodeProgram):
    def __init__(self, node, neighbors, to_children, value=None):
        super().__init__(node, neighbors)
        self.to_children = to_children
        self.value = value
        self.arrival = 0 if value is not None else None

    def step(self, t, inbox):
        if self.value is None:
            if not inbox:
                return ()
            (payload,) = inbox.values()
            self.value = payload[0]
            self.arrival = t - 1
        self.halted = True
        return [(i, (self.value,)) for i in self.to_children]


@dataclass
class BroadcastResult:
    value: dict[int, int]
    arrival: dict[int, int]
    report: ExecutionReport


def broadcast(g: Graph, source: int, value: int, parent: Parents | None = None,
              bandwidth: int | None = None) -> BroadcastResult:
    """Deliver ``value`` from ``source`` to every node.

    With ``parent`` the value travels down that tree (rooted at ``source``);
    otherwise it is flooded.
    """
    if parent is None:
        progs = {u: _FloodProgram(u, g.neighbors(u), value if u == source else None) for u in g.nodes}
    else:
        root = validate_tree(g, parent)
        if root != source:
            raise StructuralError(f"tree is rooted at {root}, not at source {source}")
        kids = children_of(parent)
        progs = {
            u: _TreeCastProgram(u, g.neighbors(u), [g.edge_index(u, c) for c in kids[u]],
                                value if u == source else None)
            for u in g.nodes
        }
    report = RoundEngine(g, progs, bandwidth).run(max_slots=10 * (sum(w for *_, w in g.edges()) + 1))
    return BroadcastResult(
        value={u: p.value for u, p in progs.items()},
        arrival={u: p.arrival for u, p in progs.items()},
        report=report,
    )


# --------------------------------------------------------------------------
# convergecast


class _ConvergecastProgram(NodeProgram):
    """Wait for every child, fold their reports into the local value, report up."""

    def __init__(self, node, neighbors, up_edge, n_children, value, op):
        super().__init__(node, neighbors)
        self.up_edge = up_edge
        self.pending = n_children
        self.op = op
        # min keeps (value, arg) or None; sum keeps an int
        self.acc = ((value, node) if value is not None else None) if op == "min" else value
        self.done_at = None

    def _fold(self, payload):
        if self.op == "sum":
            self.acc += payload[0]
        elif payload[0] == 1:
            cand = (payload[1], payload[2])
            if self.acc is None or cand < self.acc:
                self.acc = cand

    def _encode(self):
        if self.op == "sum":
            return (self.acc,)
        return (0,) if self.acc is None else (1, *self.acc)

    def step(self, t, inbox):
        for payload in inbox.values():
            self._fold(payload)
            self.pending -= 1
        if self.pending or self.halted:
            return ()
        self.halted = True
        self.done_at = t - 1 if inbox else t
        if self.up_edge is None:
            return ()
        return [(self.up_edge, self._encode())]


@dataclass
class ConvergecastResult:
    value: int | None
    arg: int | None
    completed_at: int
    report: ExecutionReport


def convergecast(g: Graph, parent: Parents, values: Mapping[int, int | None], op: str,
                 bandwidth: int | None = None) -> ConvergecastResult:
    if op not in ("min", "sum"):
        raise ValueError(f"op must be 'min' or 'sum', got {op!r}")
    root = validate_tree(g, parent)
    kids = children_of(parent)
    progs = {}
    for u in g.nodes:
        v = values.get(u)
        if op == "sum" and v is None:
            v = 0
        up = None if parent[u] is None else g.edge_index(u, parent[u])
        progs[u] = _ConvergecastProgram(u, g.neighbors(u), up, len(kids[u]), v, op)
    report = RoundEngine(g, progs, bandwidth).run(max_slots=10 * (sum(w for *_, w in g.edges()) + 1))
    top = progs[root]
    if op == "sum":
        value, arg = top.acc, None
    else:
        value, arg = top.acc if top.acc is not None else (None, None)
    return ConvergecastResult(value=value, arg=arg, completed_at=top.done_at, report=report)


def convergecast_min(g, parent, values, bandwidth=None) -> ConvergecastResult:
    """Minimum over all present values; ties go to the smaller node ID."""
    return convergecast(g, parent, values, "min", bandwidth)


def convergecast_sum(g, parent, values, bandwidth=None) -> ConvergecastResult:
    return convergecast(g, parent, values, "sum", bandwidth)
