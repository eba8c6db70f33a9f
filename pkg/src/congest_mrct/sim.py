"""Synchronous CONGEST round engine with per-edge delays.

Slot semantics
--------------
Slots are numbered from 1.  In every slot each live program's
:meth:`NodeProgram.step` is called once with the messages delivered in that
slot and returns the messages it sends in that slot.  A message sent in slot
``t`` over an edge of delay ``w`` is delivered in slot ``t + w``.

The algorithms count time the way a "send and receive within one slot"
model does: a message delivered in slot ``t`` *arrived* during slot ``t - 1``.
Hence a phase whose last communication round is slot ``K`` reports
``rounds_used == K + 1``, the extra slot being the delivery that closes it.
When phases run back to back that closing slot is also the first slot of the
next phase.

Constraints enforced as hard errors: at most one message per directed edge per
slot (:class:`ProtocolViolation`) and at most ``B`` bits per message
(:class:`BandwidthViolation`).
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from .errors import BandwidthViolation, ProtocolViolation
from .graph import Graph


def field_bits(x: int) -> int:
    """``ceil(log2(x + 2))`` bits for a nonnegative integer field."""
    return (x + 1).bit_length()


def bit_size(payload: Iterable[int]) -> int:
    return sum(field_bits(f) for f in payload)


def default_bandwidth(n: int) -> int:
    return 8 * max(1, math.ceil(math.log2(n)))


@dataclass(frozen=True)
class Message:
    payload: tuple[int, ...]

    @property
    def bit_size(self) -> int:
        return bit_size(self.payload)


class NodeProgram:
    """Per-node state machine driven by a :class:`RoundEngine`.

    Subclasses override :meth:`step`.  A program sees only its own ID, its
    incident edges and the messages delivered to it.  ``neighbors[i]`` is the
    ``(neighbor_id, delay)`` pair of local edge ``i``.
    """

    def __init__(self, node: int, neighbors: tuple[tuple[int, int], ...]):
        self.node = node
        self.neighbors = neighbors
        self.halted = False

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    def delay(self, i: int) -> int:
        return self.neighbors[i][1]

    def step(self, t: int, inbox: Mapping[int, tuple[int, ...]]) -> Iterable[tuple[int, tuple[int, ...]]]:
        """Handle slot ``t``.

        ``inbox`` maps local edge index to the payload delivered over it.
        Return ``(edge_index, payload)`` pairs to send; set ``self.halted`` to
        stop being scheduled (a halted program is still stepped when a message
        is delivered to it).
        """
        raise NotImplementedError


@dataclass
class ExecutionReport:
    rounds_used: int
    max_edge_bits: int
    messages_total: int
    halted_all: bool

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("halted_all")
        return json.dumps(d, sort_keys=True)


class RoundEngine:
    def __init__(self, graph: Graph, programs: Mapping[int, NodeProgram], bandwidth: int | None = None,
                 trace: bool = False):
        if set(programs) != set(graph.nodes):
            raise ValueError("need exactly one program per node")
        self.graph = graph
        self.programs = dict(sorted(programs.items()))
        self.B = default_bandwidth(graph.n) if bandwidth is None else bandwidth
        self.clock = 0
        # (dst, dst edge index) for every (src, src edge index)
        self._peer = {
            (u, i): (v, graph.edge_index(v, u))
            for u in graph.nodes for i, (v, _) in enumerate(graph.neighbors(u))
        }
        self._in_flight: dict[int, list[tuple[int, int, Message]]] = defaultdict(list)
        self.max_edge_bits = 0
        self.messages_total = 0
        self.trace: list[tuple[int, int, int, tuple[int, ...]]] | None = [] if trace else None

    def _quiet(self) -> bool:
        return not self._in_flight and all(p.halted for p in self.programs.values())

    def run(self, max_slots: int) -> ExecutionReport:
        """Advance until every program halted and nothing is in flight."""
        if max_slots < 1:
            raise ValueError("max_slots must be >= 1")
        last_active = self.clock
        for _ in range(max_slots):
            if self._quiet():
                break
            t = self.clock = self.clock + 1
            inboxes: dict[int, dict[int, tuple[int, ...]]] = defaultdict(dict)
            for dst, j, msg in self._in_flight.pop(t, ()):
                if j in inboxes[dst]:
                    raise ProtocolViolation(f"slot {t}: two deliveries on edge {j} of node {dst}")
                inboxes[dst][j] = msg.payload

            outgoing = []
            for u, prog in self.programs.items():
                inbox = inboxes.get(u)
                if prog.halted and not inbox:
                    continue
                sends = prog.step(t, inbox or {})
                if sends:
                    outgoing.append((u, prog, sends))
            # barrier: nothing sent in slot t is visible to any step of slot t
            for u, prog, sends in outgoing:
                used = set()
                for i, payload in sends:
                    if not 0 <= i < prog.degree:
                        raise ProtocolViolation(f"slot {t}: node {u} has no edge {i}")
                    if i in used:
                        raise ProtocolViolation(f"slot {t}: node {u} sent twice on edge {i}")
                    used.add(i)
                    payload = tuple(payload)
                    if any(not isinstance(f, int) or f < 0 for f in payload):
                        raise ProtocolViolation(f"slot {t}: node {u} sent non-integer field in {payload}")
                    msg = Message(payload)
                    bits = msg.bit_size
                    if bits > self.B:
                        raise BandwidthViolation(
                            f"slot {t}: node {u} edge {i}: {bits}-bit message {payload} exceeds B={self.B}")
                    self.max_edge_bits = max(self.max_edge_bits, bits)
                    self.messages_total += 1
                    v, j = self._peer[(u, i)]
                    self._in_flight[t + prog.delay(i)].append((v, j, msg))
                    if self.trace is not None:
                        self.trace.append((t, u, i, payload))
            last_active = t
        return ExecutionReport(
            rounds_used=last_active,
            max_edge_bits=self.max_edge_bits,
            messages_total=self.messages_total,
            halted_all=self._quiet(),
        )


def run_programs(graph: Graph, programs: Mapping[int, NodeProgram], max_slots: int,
                 bandwidth: int | None = None) -> ExecutionReport:
    return RoundEngine(graph, programs, bandwidth).run(max_slots)
