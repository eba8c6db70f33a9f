"""Shortest-path trees for every terminal, built in parallel.

Two distributed phases:

* :func:`compute_dprime` -- node 1 floods a distance wave, collects the
  largest distance (its eccentricity ``D'``) plus node and terminal counts
  through an echo, and pushes them back down its own SP-tree.  Because
  ``ecc(1) <= D <= 2 * ecc(1)``, ``2 * D'`` bounds the weighted diameter.
* :func:`build_trees` -- prioritized delayed BFS from every terminal for
  exactly ``|S| + 2 * D'`` slots.  Each node records, per root ``v``, its
  distance ``omega[v]``, the slot ``tau[v]`` in which that distance
  arrived, and the edge to its parent in ``T_v``.

Slot numbers in tables are "arrival" slots (see :mod:`congest_mrct.sim`).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CorrectnessViolation
from .graph import Graph, TerminalSet
from .sim import ExecutionReport, NodeProgram, RoundEngine


# --------------------------------------------------------------------------
# D' = ecc(1): flood + echo + push-down.
#
# Message shapes (the arity tells them apart, the direction disambiguates the
# two 3-field kinds):
#   (dist,)                 flood, to every neighbor except the parent
#   ()                      "you are my parent", to the parent
#   (maxdist, n_s, n_all)   echo, child -> parent
#   (D', |S|, n)            push-down, parent -> child


class _EccentricityProgram(NodeProgram):
    def __init__(self, node, neighbors, in_s: bool):
        super().__init__(node, neighbors)
        self.leader = node == 1
        self.dist = 0 if self.leader else None
        self.parent_edge = None
        self.heard: set[int] = set()
        self.children: list[int] = []
        self.echoes: dict[int, tuple[int, int, int]] = {}
        self.echoed = False
        self.in_s = in_s
        self.dprime = self.s_size = self.n_nodes = None
        self.down_sent_at = None  # leader's push-down slot, as inferred locally

    def _expected(self):
        return {i for i in range(self.degree) if i != self.parent_edge}

    def step(self, t, inbox):
        a = t - 1
        out: dict[int, tuple] = {}
        if self.dist is None:
            floods = sorted(i for i, p in inbox.items() if len(p) == 1)
            if not floods:
                return ()
            self.parent_edge = floods[0]
            self.dist = inbox[floods[0]][0]
            if self.dist != a:
                raise CorrectnessViolation(f"node {self.node}: wave arrived at {a} carrying {self.dist}")
            out = {i: (self.dist + self.delay(i),) for i in self._expected()}
            out[self.parent_edge] = ()
        elif self.leader and t == 1:
            out = {i: (self.delay(i),) for i in range(self.degree)}

        for i, p in inbox.items():
            if len(p) == 1:
                self.heard.add(i)
            elif i == self.parent_edge:
                if len(p) == 3:
                    self.dprime, self.s_size, self.n_nodes = p
                    self.down_sent_at = a - self.dist + 1
                    self.halted = True
                    return [(c, p) for c in sorted(self.children)]
            else:
                # a child announces itself either alone or implicitly with its echo
                self.heard.add(i)
                if i not in self.children:
                    self.children.append(i)
                if len(p) == 3:
                    self.echoes[i] = p

        if (not self.echoed and self.dist is not None and self.heard >= self._expected()
                and len(self.echoes) == len(self.children)):
            self.echoed = True
            far = max([self.dist] + [e[0] for e in self.echoes.values()])
            n_s = int(self.in_s) + sum(e[1] for e in self.echoes.values())
            n_all = 1 + sum(e[2] for e in self.echoes.values())
            if self.leader:
                self.dprime, self.s_size, self.n_nodes = far, n_s, n_all
                self.down_sent_at = t
                self.halted = True
                for c in self.children:
                    out[c] = (far, n_s, n_all)
            else:
                out[self.parent_edge] = (far, n_s, n_all)
        return sorted(out.items())


@dataclass
class DprimeResult:
    """Per-node knowledge after the leader phase (identical at every node)."""

    dprime: dict[int, int]
    s_size: dict[int, int]
    n_nodes: dict[int, int]
    dist_from_leader: dict[int, int]
    leader_parent: dict[int, int | None]  # node 1's SP-tree
    next_phase_slot: dict[int, int]  # engine slot at which the next phase starts
    report: ExecutionReport

    @property
    def value(self) -> int:
        return self.dprime[1]


def compute_dprime(g: Graph, terminals: TerminalSet | None = None, bandwidth: int | None = None) -> DprimeResult:
    in_s = set(terminals) if terminals is not None else set()
    progs = {u: _EccentricityProgram(u, g.neighbors(u), u in in_s) for u in g.nodes}
    engine = RoundEngine(g, progs, bandwidth)
    report = engine.run(max_slots=8 * (sum(w for *_, w in g.edges()) + 2))
    if not report.halted_all or any(p.dprime is None for p in progs.values()):
        raise CorrectnessViolation("leader phase did not terminate")
    parents = {u: (None if p.parent_edge is None else g.neighbors(u)[p.parent_edge][0]) for u, p in progs.items()}
    dp = progs[1].dprime
    return DprimeResult(
        dprime={u: p.dprime for u, p in progs.items()},
        s_size={u: p.s_size for u, p in progs.items()},
        n_nodes={u: p.n_nodes for u, p in progs.items()},
        dist_from_leader={u: p.dist for u, p in progs.items()},
        leader_parent=parents,
        next_phase_slot={u: p.down_sent_at + dp for u, p in progs.items()},
        report=report,
    )


# --------------------------------------------------------------------------
# Parallel delayed BFS


@dataclass
class TreeTable:
    node: int
    omega: dict[int, int]
    tau: dict[int, int]
    parent_edge: dict[int, int]
    parent: dict[int, int]  # neighbor ID behind parent_edge, for convenience
    dprime: int
    roots: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            str(v): {"omega": self.omega[v], "tau": self.tau[v], "parent_edge": self.parent_edge.get(v)}
            for v in sorted(self.omega)
        }


class TreeBuilderProgram(NodeProgram):
    """Per-node state of the prioritized delayed BFS.

    ``L_i`` holds the roots whose current entry still has to go out over edge
    ``i``.  Per slot and edge the node sends the entry with the smallest
    ``(omega, root ID)`` from ``L_i`` together with the distance through this
    node.  An arrival that improves ``omega[v]`` (or is the first one for
    ``v``) fixes the parent edge and ``tau[v]`` and queues ``v`` on every other
    edge.  Both directions of an edge are usable in the same slot.

    Ranking by distance first is what makes the waves behave like BFS: the
    entry in position ``i`` of a node's final sorted list with distance ``d``
    has arrived by slot ``d + i - 1``, so everything settles by
    ``|S| + D - 1 <= K - 1``.  Sends that could not arrive within ``K`` are
    skipped.
    """

    def __init__(self, node, neighbors, is_root: bool, K: int, dprime: int):
        super().__init__(node, neighbors)
        self.K = K
        self.dprime = dprime
        self.L: set[int] = set()
        self.Ls: list[set[int]] = [set() for _ in range(self.degree)]
        self.omega: dict[int, int] = {}
        self.tau: dict[int, int] = {}
        self.parent_edge: dict[int, int] = {}
        if is_root:
            self.L.add(node)
            self.omega[node] = 0
            self.tau[node] = 0
            for s in self.Ls:
                s.add(node)

    def step(self, t, inbox):
        if t >= 2:
            self._receive(t - 1, inbox)
        if t > self.K:
            self.halted = True
            return ()
        return self._offer(t)

    def _offer(self, t):
        out = []
        for i in range(self.degree):
            w = self.delay(i)
            if t + w - 1 > self.K or not self.Ls[i]:
                continue
            l = min(self.Ls[i], key=lambda v: (self.omega[v], v))
            self.Ls[i].discard(l)
            out.append((i, (l, self.omega[l] + w)))
        return out

    def _receive(self, a, inbox):
        # several neighbors may report the same root at once: shortest first
        for i, (r, d) in sorted(inbox.items(), key=lambda kv: (kv[1][1], kv[0])):
            if r in self.omega and d >= self.omega[r]:
                continue
            self.omega[r] = d
            self.tau[r] = a
            self.parent_edge[r] = i
            self.L.add(r)
            for j, pending in enumerate(self.Ls):
                if j == i:
                    pending.discard(r)
                else:
                    pending.add(r)

    def table(self) -> TreeTable:
        return TreeTable(
            node=self.node,
            omega=dict(sorted(self.omega.items())),
            tau=dict(sorted(self.tau.items())),
            parent_edge=dict(sorted(self.parent_edge.items())),
            parent={v: self.neighbors[i][0] for v, i in sorted(self.parent_edge.items())},
            dprime=self.dprime,
        )


@dataclass
class TreesResult:
    tables: dict[int, TreeTable]
    roots: tuple[int, ...]
    K: int
    report: ExecutionReport

    def parent_map(self, root: int) -> dict[int, int | None]:
        return {u: tab.parent.get(root) for u, tab in self.tables.items()}

    def dump_json(self) -> str:
        return json.dumps({str(u): tab.to_json() for u, tab in self.tables.items()}, sort_keys=True)


def slot_budget(n_roots: int, dprime: int) -> int:
    return n_roots + 2 * dprime


def build_trees(g: Graph, roots: TerminalSet, dprime: int, bandwidth: int | None = None) -> TreesResult:
    """Run the tree-building phase for exactly ``|roots| + 2 * dprime`` slots."""
    K = slot_budget(len(roots), dprime)
    progs = {u: TreeBuilderProgram(u, g.neighbors(u), u in roots, K, dprime) for u in g.nodes}
    report = RoundEngine(g, progs, bandwidth).run(max_slots=K + 1)
    tables = {u: p.table() for u, p in progs.items()}
    for u, tab in tables.items():
        tab.roots = roots.members
        missing = [v for v in roots if v not in tab.omega]
        if missing:
            raise CorrectnessViolation(f"slot budget {K} exhausted: node {u} never reached by roots {missing}")
    return TreesResult(tables=tables, roots=roots.members, K=K, report=report)
