"""Routing cost of every shortest-path tree, computed bottom-up in parallel.

For a tree ``T`` and a node ``u``, ``rc(T, u)`` is the part of ``RC_S(T)``
carried by the edges below ``u``.  A child edge of delay ``w`` whose subtree
holds ``z`` terminals lies on ``2 * z * (|S| - z)`` ordered terminal paths, so

    rc(T, u) = sum over children c of  rc(T, c) + 2 * w(u, c) * z_c * (|S| - z_c)

and the value at the root is ``RC_S(T)``.

Scheduling reuses the timestamps of the tree-building phase: node ``u``
reports root ``v``'s partial result to its parent at slot ``K - tau_u[v]``.
A child's ``tau`` exceeds its parent's by at least the edge delay, so every
child report has arrived before the parent's own turn, and distinct roots on
one edge have distinct ``tau`` values (they arrived over that edge in
different slots), so no edge carries two reports in one slot.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ScheduleViolation
from .graph import Graph, TerminalSet
from .sim import ExecutionReport, NodeProgram, RoundEngine
from .sptrees import TreeTable, TreesResult


def rc_formula(z_child: int, s_size: int, edge_delay: int) -> int:
    """Contribution of one tree edge: ``2 * w * z * (|S| - z)``."""
    if not 0 <= z_child <= s_size:
        raise ValueError(f"subtree count {z_child} outside 0..{s_size}")
    return 2 * edge_delay * z_child * (s_size - z_child)


class _ReverseWaveProgram(NodeProgram):
    """Shared machinery: one report per root, sent to the parent at ``K - tau``.

    Subclasses define the initial state per root, how a child's report is
    folded in, and the payload sent upward.
    """

    def __init__(self, node, neighbors, table: TreeTable, K: int):
        super().__init__(node, neighbors)
        self.table = table
        self.K = K
        self.due: dict[int, list[int]] = {}
        for v, tau in table.tau.items():
            if v in table.parent_edge:
                self.due.setdefault(K - tau, []).append(v)
        self.reported: set[int] = set()
        self.children: dict[int, list[int]] = {v: [] for v in table.omega}

    def fold(self, v, i, fields):
        raise NotImplementedError

    def payload(self, v):
        raise NotImplementedError

    def step(self, t, inbox):
        for i, (v, *fields) in sorted(inbox.items()):
            if v in self.reported:
                raise ScheduleViolation(
                    f"node {self.node}: report for root {v} arrived at slot {t - 1}, after ours went out")
            if self.table.parent_edge.get(v) == i:
                raise ScheduleViolation(f"node {self.node}: root {v} report came from its own parent")
            self.children[v].append(i)
            self.fold(v, i, fields)
        if t > self.K:
            self.halted = True
            return ()
        out = []
        used = set()
        for v in self.due.get(t, ()):
            e = self.table.parent_edge[v]
            if e in used:
                raise ScheduleViolation(f"node {self.node}: two roots due on edge {e} at slot {t}")
            used.add(e)
            self.reported.add(v)
            out.append((e, (v, *self.payload(v))))
        return out


class RoutingCostProgram(_ReverseWaveProgram):
    """Node state ``rc[v]``, ``z[v]`` for every root ``v`` known to the node."""

    def __init__(self, node, neighbors, table: TreeTable, K: int, in_s: bool, s_size: int):
        super().__init__(node, neighbors, table, K)
        self.s_size = s_size
        self.rc = {v: 0 for v in table.omega}
        self.z = {v: int(in_s) for v in table.omega}

    def fold(self, v, i, fields):
        r, z = fields
        self.rc[v] += r + rc_formula(z, self.s_size, self.delay(i))
        self.z[v] += z

    def payload(self, v):
        return self.rc[v], self.z[v]


class SsrcProgram(_ReverseWaveProgram):
    """Sums ``omega_u[v]`` over the terminals in each subtree of ``T_v``."""

    def __init__(self, node, neighbors, table: TreeTable, K: int, in_s: bool):
        super().__init__(node, neighbors, table, K)
        self.acc = {v: (table.omega[v] if in_s else 0) for v in table.omega}

    def fold(self, v, i, fields):
        self.acc[v] += fields[0]

    def payload(self, v):
        return (self.acc[v],)


@dataclass
class CostTable:
    node: int
    rc: dict[int, int]
    z: dict[int, int]


@dataclass
class RoutingCostResult:
    rc: dict[int, int]  # root -> RC_S(T_root), as held by the root itself
    tables: dict[int, CostTable]
    K: int
    report: ExecutionReport

    def dump_json(self, ssrc: dict[int, int] | None = None) -> str:
        out = {str(v): {"rc": c, "ssrc": None if ssrc is None else ssrc.get(v)} for v, c in self.rc.items()}
        return json.dumps(out, sort_keys=True)


def make_rc_programs(g: Graph, trees: TreesResult, terminals: TerminalSet) -> dict[int, RoutingCostProgram]:
    """One program per node.  ``terminals`` is the full set ``S``; the roots
    are whatever ``trees`` was built for (possibly a sample of ``S``)."""
    return {
        u: RoutingCostProgram(u, g.neighbors(u), trees.tables[u], trees.K, u in terminals, len(terminals))
        for u in g.nodes
    }


def run_rc_programs(g: Graph, trees: TreesResult, progs: dict[int, RoutingCostProgram],
                    bandwidth: int | None = None) -> RoutingCostResult:
    report = RoundEngine(g, progs, bandwidth).run(max_slots=trees.K + 1)
    rc = {v: progs[v].rc[v] for v in trees.roots}
    tables = {u: CostTable(u, dict(p.rc), dict(p.z)) for u, p in progs.items()}
    return RoutingCostResult(rc=rc, tables=tables, K=trees.K, report=report)


def compute_all_rc(g: Graph, trees: TreesResult, terminals: TerminalSet,
                   bandwidth: int | None = None) -> RoutingCostResult:
    """``RC_S(T_v)`` for every root ``v`` of ``trees``, in exactly ``K`` slots."""
    return run_rc_programs(g, trees, make_rc_programs(g, trees, terminals), bandwidth)


@dataclass
class SsrcResult:
    ssrc: dict[int, int]
    report: ExecutionReport


def compute_ssrc(g: Graph, trees: TreesResult, terminals: TerminalSet,
                 bandwidth: int | None = None) -> SsrcResult:
    """``SSRC_S(v)`` for every root ``v``, by a separate reverse wave.

    It is not folded into the cost wave: four fields per message do not fit
    the default bandwidth on small graphs with long delays.
    """
    progs = {u: SsrcProgram(u, g.neighbors(u), trees.tables[u], trees.K, u in terminals) for u in g.nodes}
    report = RoundEngine(g, progs, bandwidth).run(max_slots=trees.K + 1)
    return SsrcResult(ssrc={v: progs[v].acc[v] for v in trees.roots}, report=report)


def local_ssrc(trees: TreesResult, terminals: TerminalSet) -> dict[int, int] | None:
    """When every terminal is a root, each root already knows its distances to all of S."""
    if set(trees.roots) != set(terminals):
        return None
    return {v: sum(trees.tables[v].omega[u] for u in terminals) for v in trees.roots}


def extract_tree(g: Graph, trees: TreesResult, root: int) -> list[tuple[int, int, int]]:
    """Edges of ``T_root`` as ``(u, v, w)`` with ``u < v``, from the parent pointers."""
    edges = []
    for u, p in trees.parent_map(root).items():
        if p is not None:
            a, b = min(u, p), max(u, p)
            edges.append((a, b, g.delay(a, b)))
    return sorted(edges)


def oracle_rc_check(g: Graph, trees: TreesResult, result: RoutingCostResult, terminals: TerminalSet,
                    root: int) -> bool:
    """Compare the distributed ``RC_S(T_root)`` with a central computation on the extracted tree."""
    from .oracle import rc_exact

    return result.rc[root] == rc_exact((g.n, extract_tree(g, trees, root)), terminals)
