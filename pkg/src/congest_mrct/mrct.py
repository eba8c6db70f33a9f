"""End-to-end approximate S-MRCT: deterministic and sampled variants.

Both pipelines run as a chain of engine phases:

    leader phase (D', |S|, n)  ->  [sampling]  ->  trees  ->  routing costs
        ->  argmin convergecast over node 1's tree  ->  announce the winner

Consecutive phases share one slot (the delivery that closes a phase is the
first slot of the next), so the end-to-end count is the sum of the phase
lengths minus one per boundary.

Deterministic: every terminal roots a tree; the cheapest tree is within
``2 - 2/|S|`` of ``RC_S(G)``.  Randomized: only a uniform sample ``S'`` of
``s = ceil(gamma * ln n)`` terminals root trees, costs are still taken over
all of ``S``, and the result is within ``2 - 2/|S| + beta`` with high
probability.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidTerminalSet, SamplingFailure
from .graph import Graph, TerminalSet
from .primitives import broadcast, children_of, convergecast_min, validate_tree
from .routing_cost import compute_all_rc
from .sim import ExecutionReport, NodeProgram, RoundEngine
from .sptrees import DprimeResult, build_trees, compute_dprime

MAX_SAMPLING_ATTEMPTS = 10


def chain_rounds(reports) -> int:
    reports = list(reports)
    return sum(r.rounds_used for r in reports) - max(0, len(reports) - 1)


def det_bound_holds(rc_tree: int, rc_graph: int, s_size: int) -> bool:
    """``rc_tree <= (2 - 2/|S|) * rc_graph`` in integers."""
    return rc_tree * s_size <= (2 * s_size - 2) * rc_graph


def rand_bound_holds(rc_tree: int, rc_graph: int, s_size: int, beta: float) -> bool:
    """``rc_tree <= (2 - 2/|S| + beta) * rc_graph``, exact in the float value of beta."""
    return Fraction(rc_tree) <= (2 - Fraction(2, s_size) + Fraction(beta)) * rc_graph


# --------------------------------------------------------------------------
# results


@dataclass
class MrctResult:
    mode: str
    chosen_root: int
    rc_chosen: int
    tree: dict[int, int | None]  # node -> parent in the announced tree
    rounds_used: int
    max_edge_bits: int
    terminals: tuple[int, ...]
    dprime: int
    sample: tuple[int, ...] | None = None
    params: "SamplingParams | None" = None
    fallback: bool = False
    rc_all: dict[int, int] = field(default_factory=dict)  # root -> RC_S(T_root) for every evaluated root
    phases: dict[str, int] = field(default_factory=dict)
    # intermediate phase outputs (leader, trees, costs) for inspection and tests
    artifacts: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def bound(self) -> float:
        b = 2 - 2 / len(self.terminals)
        if self.params is not None and not self.fallback:
            b += self.params.beta
        return b

    def round_budget(self, d_omega: int) -> int:
        """Allowed end-to-end slots: ``4(k + D) + 6D`` with ``k = |S|`` or ``s``."""
        k = len(self.sample) if self.sample is not None else len(self.terminals)
        return 4 * (k + d_omega) + 6 * d_omega

    def within_bound(self, rc_graph: int) -> bool:
        if self.params is not None and not self.fallback:
            return rand_bound_holds(self.rc_chosen, rc_graph, len(self.terminals), self.params.beta)
        return det_bound_holds(self.rc_chosen, rc_graph, len(self.terminals))

    def to_dict(self, rc_graph: int | None = None) -> dict:
        return {
            "mode": self.mode,
            "chosen_root": self.chosen_root,
            "rc_chosen": self.rc_chosen,
            "rc_graph_oracle": rc_graph,
            "ratio": None if rc_graph is None else self.rc_chosen / rc_graph,
            "bound": self.bound,
            "rounds_used": self.rounds_used,
            "max_edge_bits": self.max_edge_bits,
            "sample": None if self.sample is None else list(self.sample),
        }

    def to_json(self, rc_graph: int | None = None) -> str:
        return json.dumps(self.to_dict(rc_graph), sort_keys=True)


# --------------------------------------------------------------------------
# shared tail: argmin over the leader's tree, then announce


def _select_and_announce(g, dp: DprimeResult, roots, rc: dict[int, int], bandwidth):
    t1 = dp.leader_parent
    best = convergecast_min(g, t1, {v: rc[v] for v in roots}, bandwidth)
    ann = announce_tree(g, t1, best.arg, bandwidth)
    return best, ann


@dataclass
class Announcement:
    root: int
    report: ExecutionReport


def announce_tree(g: Graph, leader_tree, chosen_root: int, bandwidth: int | None = None) -> Announcement:
    """Node 1 tells everybody which tree won; each node then outputs its parent in it."""
    res = broadcast(g, 1, chosen_root, parent=leader_tree, bandwidth=bandwidth)
    heard = set(res.value.values())
    if heard != {chosen_root}:
        raise AssertionError(f"announcement reached nodes with values {heard}")
    return Announcement(chosen_root, res.report)


def _finish(mode, g, S, dp, trees, rcres, best, phase_reports, **extra) -> MrctResult:
    tree = trees.parent_map(best.arg)
    validate_tree(g, tree)
    return MrctResult(
        mode=mode,
        chosen_root=best.arg,
        rc_chosen=best.value,
        tree=tree,
        rounds_used=chain_rounds(phase_reports.values()),
        max_edge_bits=max(r.max_edge_bits for r in phase_reports.values()),
        terminals=S.members,
        dprime=dp.value,
        rc_all=dict(rcres.rc),
        phases={k: r.rounds_used for k, r in phase_reports.items()},
        artifacts={"leader": dp, "trees": trees, "costs": rcres},
        **extra,
    )


def run_deterministic(g: Graph, S: TerminalSet, bandwidth: int | None = None) -> MrctResult:
    if len(S) < 2:
        raise InvalidTerminalSet("need at least 2 terminals")
    dp = compute_dprime(g, S, bandwidth)
    return _deterministic_after_leader(g, S, dp, bandwidth)


def _deterministic_after_leader(g, S, dp, bandwidth, mode="deterministic", **extra):
    trees = build_trees(g, S, dp.value, bandwidth)
    rcres = compute_all_rc(g, trees, S, bandwidth)
    best, ann = _select_and_announce(g, dp, S, rcres.rc, bandwidth)
    reports = {"leader": dp.report, "trees": trees.report, "costs": rcres.report,
               "argmin": best.report, "announce": ann.report}
    return _finish(mode, g, S, dp, trees, rcres, best, reports, **extra)


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplingParams:
    alpha: float
    beta: float
    gamma: int
    s: int
    fallback: bool  # |S| <= s: sampling would not shrink anything


def sampling_params(n: int, s_size: int, d_bound: float, alpha: float) -> SamplingParams:
    """``beta = min(ln n / D, alpha)``, ``gamma = ceil((2 - 2/|S|) / beta) + 1``, ``s = ceil(gamma ln n)``.

    ``d_bound`` is whatever the caller knows about the diameter; the
    pipelines pass ``2 * D'``, an upper bound, which only makes beta smaller.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if n < 2 or s_size < 2 or d_bound <= 0:
        raise ValueError("need n >= 2, |S| >= 2 and a positive diameter bound")
    ln_n = math.log(n)
    beta = min(ln_n / d_bound, alpha)
    gamma = math.ceil((2 - 2 / s_size) / beta) + 1
    s = math.ceil(gamma * ln_n)
    return SamplingParams(alpha=alpha, beta=beta, gamma=gamma, s=s, fallback=s_size <= s)


class _SampleUpcast(NodeProgram):
    """Pipelined merge of the ``s`` smallest keys toward node 1.

    Every node emits its subtree's keys in ascending order, one per slot, and
    only when each child has either a key waiting or has said it is done, so
    the stream stays sorted.  ``()`` means "done".  Node 1 just collects.
    """

    def __init__(self, node, neighbors, up_edge, child_edges, key, s):
        super().__init__(node, neighbors)
        self.up_edge = up_edge
        self.queues = {i: deque() for i in child_edges}
        self.finished: set[int] = set()
        self.local = [key] if key is not None else []
        self.s = s
        self.sent = 0
        self.collected: list[tuple[int, int]] = []

    def _ready(self):
        return all(i in self.finished or self.queues[i] for i in self.queues)

    def _pop_min(self):
        heads = [(q[0], i) for i, q in self.queues.items() if q]
        if self.local:
            heads.append((self.local[0], None))
        if not heads:
            return None
        k, i = min(heads)
        if i is None:
            self.local.pop(0)
        else:
            self.queues[i].popleft()
        return k

    def step(self, t, inbox):
        for i, p in inbox.items():
            if p:
                self.queues[i].append(tuple(p))
            else:
                self.finished.add(i)
        if self.halted:
            return ()
        if self.up_edge is None:
            while len(self.collected) < self.s and self._ready():
                k = self._pop_min()
                if k is None:
                    break
                self.collected.append(k)
            if len(self.collected) == self.s or (self._ready() and len(self.finished) == len(self.queues)
                                                 and not self.local):
                self.halted = True
            return ()
        if not self._ready():
            return ()
        k = self._pop_min() if self.sent < self.s else None
        if k is None:
            self.halted = True
            return [(self.up_edge, ())]
        self.sent += 1
        return [(self.up_edge, k)]


@dataclass
class SampleResult:
    sample: TerminalSet
    attempts: int
    sub_sample_sizes: list[int]  # |S''| per attempt
    reports: list[ExecutionReport]


def sample_terminals(g: Graph, S: TerminalSet, params: SamplingParams, dp: DprimeResult, seed: int = 0,
                     c_sample: float = 2.0, bandwidth: int | None = None) -> SampleResult:
    """Pick ``S'``, a uniformly random ``s``-subset of ``S``.

    Each terminal joins ``S''`` with probability ``min(1, c * s / |S|)`` and
    draws a random label; the ``s`` smallest ``(label, id)`` keys are merged
    up node 1's tree and node 1 broadcasts the largest of them as a
    threshold.  Too few keys means a fresh attempt (threshold 0 signals it).
    """
    if c_sample < 1:
        raise ValueError(f"c_sample must be >= 1, got {c_sample}")
    if params.fallback:
        raise ValueError("sampling requested although |S| <= s")
    n = g.n
    prob = min(1.0, c_sample * params.s / len(S))
    t1 = dp.leader_parent
    kids = children_of(t1)
    label_range = n ** 3
    reports, sizes = [], []
    for attempt in range(1, MAX_SAMPLING_ATTEMPTS + 1):
        keys = {}
        for u in S:
            rng = np.random.default_rng([seed, attempt, u])
            if rng.random() < prob:
                keys[u] = (int(rng.integers(0, label_range)), u)
        sizes.append(len(keys))
        progs = {
            u: _SampleUpcast(u, g.neighbors(u), None if t1[u] is None else g.edge_index(u, t1[u]),
                             [g.edge_index(u, c) for c in kids[u]], keys.get(u), params.s)
            for u in g.nodes
        }
        reports.append(RoundEngine(g, progs, bandwidth).run(max_slots=10 * (params.s + n * max(1, dp.value))))
        got = progs[1].collected
        if len(got) == params.s:
            label, vid = got[-1]
            code = label * (n + 1) + vid + 1
        else:
            code = 0
        ann = broadcast(g, 1, code, parent=t1, bandwidth=bandwidth)
        reports.append(ann.report)
        if code:
            threshold = ((code - 1) // (n + 1), (code - 1) % (n + 1))
            chosen = [u for u, k in keys.items() if k <= threshold]
            return SampleResult(TerminalSet(g, chosen), attempt, sizes, reports)
    raise SamplingFailure(f"fewer than s={params.s} sampled terminals in {MAX_SAMPLING_ATTEMPTS} attempts")


def run_randomized(g: Graph, S: TerminalSet, alpha: float = 1.0, c_sample: float = 2.0, seed: int = 0,
                   bandwidth: int | None = None) -> MrctResult:
    if len(S) < 2:
        raise InvalidTerminalSet("need at least 2 terminals")
    dp = compute_dprime(g, S, bandwidth)
    params = sampling_params(g.n, dp.s_size[1], 2 * dp.value, alpha)
    if params.fallback:
        return _deterministic_after_leader(g, S, dp, bandwidth, mode="randomized", params=params, fallback=True)
    smp = sample_terminals(g, S, params, dp, seed, c_sample, bandwidth)
    trees = build_trees(g, smp.sample, dp.value, bandwidth)
    rcres = compute_all_rc(g, trees, S, bandwidth)
    best, ann = _select_and_announce(g, dp, smp.sample, rcres.rc, bandwidth)
    reports = {"leader": dp.report}
    for k, r in enumerate(smp.reports):
        reports[f"sample{k // 2 + 1}-{('upcast', 'threshold')[k % 2]}"] = r
    reports.update({"trees": trees.report, "costs": rcres.report, "argmin": best.report, "announce": ann.report})
    res = _finish("randomized", g, S, dp, trees, rcres, best, reports, sample=smp.sample.members, params=params)
    res.artifacts["sampling"] = smp
    return res


def good_nodes(ssrc: dict[int, int], gamma: int) -> set[int]:
    """Terminals whose SSRC is at most the ``ceil(|S| / gamma)``-th smallest."""
    vals = sorted(ssrc.values())
    cut = vals[math.ceil(len(vals) / gamma) - 1]
    return {v for v, c in ssrc.items() if c <= cut}
