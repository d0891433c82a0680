"""Distributed broadcast protocols: flooding, convergecast, fastest broadcast.

All protocol logic runs as node handlers inside the simulator.  Reliability
over vanishing edges comes from one local fact each node has (its incident
presence schedule, learnable from periodicity): a send started at the
beginning of a full-latency window always completes, so retrying at every
such appearance guarantees eventual delivery without loss feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .graph import GraphError, NodeId, Time, TimeVaryingGraph, as_time, normalize_date
from .learner import DistanceLearner
from .oracle import UnreachableError
from .segments import SegmentTable, aggregate, min_windows, zero_table
from .sim import NodeProcess, Simulator, format_time
from .tclocks import TClockLayer


class BroadcastError(RuntimeError):
    pass


@dataclass(frozen=True)
class BroadcastTree:
    """Result of one flood: who relayed to whom, and when each node got it."""

    root: NodeId
    parent: Dict[NodeId, NodeId]
    reception: Dict[NodeId, Time]

    def serialize(self) -> str:
        lines = [f"{v} {self.parent[v]} {format_time(self.reception[v])}"
                 for v in sorted(self.parent)]
        return "\n".join(lines)


# -- flooding / convergecast-tree protocol ------------------------------------

class _FloodNode(NodeProcess):
    """Flood with per-neighbor handshake.

    Message kinds: ("info", you_are_my_parent, i_heard_you) both spreads the
    broadcast and acknowledges; ("done",)/("done-ack",) roll subtree
    completion up to the root.
    """

    def __init__(self, node: NodeId, coord: "_FloodCoordinator"):
        super().__init__(node)
        self.coord = coord
        self.usable: List[NodeId] = []
        self.informed = False
        self.reception: Optional[Time] = None
        self.parent: Optional[NodeId] = None
        self.first_senders: List[NodeId] = []
        self.got_from: set = set()
        self.they_heard: set = set()
        self.ack_delivered: set = set()
        self.children: set = set()
        self.done_children: set = set()
        self.done_ack_delivered: set = set()
        self.complete = False
        self.done_acked = False

    # -- lifecycle ----------------------------------------------------------

    def on_start(self, ctx):
        self.usable = [x for x in self.coord.g.neighbors(self.node)
                       if ctx.edge_usable(x)]
        if self.node == self.coord.root:
            ctx.set_timer(self.coord.t0 + ctx.offset, "start-flood")

    def on_timer(self, ctx, tag):
        if tag == "start-flood" and not self.informed:
            self._become_informed(ctx)

    def _become_informed(self, ctx):
        self.informed = True
        self.reception = self.coord.now(ctx)
        if self.first_senders:
            self.parent = min(self.first_senders)
        for x in self.usable:
            self._send_info(ctx, x)
        self.coord.node_informed(self)
        self._check_complete(ctx)

    # -- sending ------------------------------------------------------------

    def _send_info(self, ctx, x: NodeId):
        heard = x in self.got_from
        if ctx.can_send(x) and heard:
            # guaranteed delivery of our acknowledgment
            self.ack_delivered.add(x)
        ctx.send(x, ("info", self.parent == x, heard))

    def _settled(self, x: NodeId) -> bool:
        return x in self.they_heard and x in self.ack_delivered

    def on_edge_appear(self, ctx, x: NodeId):
        if not self.informed or x not in self.usable:
            return
        if not ctx.can_send(x):
            return  # interval too short for a transmission
        if not self._settled(x):
            self._send_info(ctx, x)
        if self.complete and self.parent == x and not self.done_acked:
            ctx.send(x, ("done",))
        if x in self.done_children and x not in self.done_ack_delivered:
            self.done_ack_delivered.add(x)
            ctx.send(x, ("done-ack",))

    # -- receiving ----------------------------------------------------------

    def on_message(self, ctx, sender: NodeId, msg):
        kind = msg[0]
        if kind == "info":
            _, is_parent, heard = msg
            newly = sender not in self.got_from
            self.got_from.add(sender)
            if heard:
                self.they_heard.add(sender)
            if is_parent:
                self.children.add(sender)
            if not self.informed:
                self.first_senders.append(sender)
                if len(self.first_senders) == 1:
                    ctx.at_instant_end(lambda: self._become_informed(ctx))
                return
            if newly and not self._settled(sender):
                self._send_info(ctx, sender)  # opportunistic acknowledgment
            self._check_complete(ctx)
        elif kind == "done":
            self.done_children.add(sender)
            if ctx.can_send(sender):
                self.done_ack_delivered.add(sender)
            ctx.send(sender, ("done-ack",))
            self._check_complete(ctx)
        elif kind == "done-ack":
            self.done_acked = True

    # -- completion ---------------------------------------------------------

    def _check_complete(self, ctx):
        if self.complete or not self.informed:
            return
        if not all(self._settled(x) for x in self.usable):
            return
        if not self.children <= self.done_children:
            return
        self.complete = True
        if self.node == self.coord.root:
            self.coord.root_complete()
        elif self.parent is not None:
            ctx.send(self.parent, ("done",))


class _FloodCoordinator:
    def __init__(self, sim: Simulator, root: NodeId, t0: Time, stop_when: str):
        self.sim = sim
        self.g = sim.graph
        self.root = root
        self.t0 = t0
        self.stop_when = stop_when
        self.procs = {}
        for v in self.g.nodes:
            proc = _FloodNode(v, self)
            self.procs[v] = proc
            sim.add_process(proc)
        self.informed_count = 0
        self.finished = False

    def now(self, ctx) -> Time:
        return ctx.now() - ctx.offset  # reception dates in the global referential

    def node_informed(self, proc: _FloodNode):
        self.informed_count += 1
        if self.stop_when == "informed" and self.informed_count == len(self.g.nodes):
            self.finished = True
            self.sim.stop()

    def root_complete(self):
        if self.stop_when == "complete":
            self.finished = True
            self.sim.stop()

    def tree(self) -> BroadcastTree:
        parent = {}
        reception = {}
        for v, proc in self.procs.items():
            if not proc.informed:
                raise UnreachableError(f"node {v!r} never reached from {self.root!r}")
            reception[v] = proc.reception
            if v != self.root:
                parent[v] = proc.parent
        return BroadcastTree(self.root, parent, reception)


def _run_flood(sim: Simulator, root: NodeId, t0: Time, stop_when: str) -> _FloodCoordinator:
    g = sim.graph
    if root not in g.nodes:
        raise GraphError(f"unknown root {root!r}")
    t0 = as_time(t0)
    n = len(g.nodes)
    reach_bound = t0 + (n - 1) * (g.period + g.latency)
    if stop_when == "informed":
        # every node is informed by the reachability bound; the run stops
        # itself at the last reception, so a small slack suffices
        horizon = reach_bound + g.period + g.latency
    else:
        horizon = t0 + (2 * n + 6) * (g.period + g.latency)
    if (t0 > 0 and sim.time == 0 and not sim._heap and not sim._started
            and sim._edge_horizon == 0):
        # nothing happens before the emission date on a fresh simulator
        sim.skip_to(t0)
    coord = _FloodCoordinator(sim, root, t0, stop_when)
    # advance one period at a time: the run usually stops well before the
    # worst-case horizon, so later spans never need their edge events
    t = t0
    while not coord.finished and t < horizon:
        t = min(t + g.period + g.latency, horizon)
        sim.run(t)
    uninformed = [v for v, pr in coord.procs.items() if not pr.informed]
    if uninformed:
        raise UnreachableError(
            f"nodes {uninformed} not reached from {root!r} within the bound")
    late = [v for v, pr in coord.procs.items() if pr.reception > reach_bound]
    if late:
        raise BroadcastError(f"nodes {late} reached after the reachability bound")
    if stop_when == "complete" and not coord.finished:
        raise BroadcastError("termination detection did not complete")
    return coord


def build_convergecast_tree(sim: Simulator, root: NodeId, t0=0) -> BroadcastTree:
    """Flood from root at t0; every node adopts the first sender as parent
    (ties: smallest id) and the root detects completion of the whole tree."""
    return _run_flood(sim, root, t0, "complete").tree()


def foremost_broadcast(sim: Simulator, root: NodeId, t0=0) -> BroadcastTree:
    """Same flood, stopping once every node is informed.  Relaying at first
    opportunity and on every appearance makes receptions earliest-possible."""
    return _run_flood(sim, root, t0, "informed").tree()


# -- distance aggregation back to the emitter ---------------------------------

class _AggregationNode(NodeProcess):
    """Learn the local distance table, merge with children tables, send up."""

    def __init__(self, node: NodeId, coord: "_AggCoordinator"):
        super().__init__(node)
        self.coord = coord
        self.children = coord.children.get(node, ())
        self.parent = coord.parents.get(node)
        self.own_table: Optional[SegmentTable] = None
        self.child_tables: Dict[NodeId, SegmentTable] = {}
        self.sent_guaranteed = False
        self.acked = False
        self.ack_delivered: set = set()

    def on_start(self, ctx):
        if self.node == self.coord.emitter:
            self.own_table = zero_table(self.coord.g.period)

    def learner_done(self, ctx, table: SegmentTable):
        self.own_table = table
        self._try_send(ctx)

    def merged(self) -> SegmentTable:
        acc = self.own_table
        for c in sorted(self.child_tables):
            acc = aggregate(acc, self.child_tables[c])
        return acc

    def _ready(self) -> bool:
        return (self.own_table is not None
                and all(c in self.child_tables for c in self.children))

    def _try_send(self, ctx):
        if not self._ready():
            return
        if self.node == self.coord.emitter:
            self.coord.emitter_done(self.merged())
            return
        if not self.acked:
            payload = ("table", tuple(self.merged().as_rows()))
            if ctx.can_send(self.parent):
                self.sent_guaranteed = True
            ctx.send(self.parent, payload)

    def on_edge_appear(self, ctx, x: NodeId):
        if not ctx.can_send(x):
            return
        if x == self.parent and self._ready() and not self.acked:
            self._try_send(ctx)
        if x in self.child_tables and x not in self.ack_delivered:
            self.ack_delivered.add(x)
            ctx.send(x, ("table-ack",))

    def on_message(self, ctx, sender: NodeId, msg):
        kind = msg[0]
        if kind == "table":
            rows = msg[1]
            self.child_tables[sender] = SegmentTable.of(rows, self.coord.g.period)
            if ctx.can_send(sender):
                self.ack_delivered.add(sender)
            ctx.send(sender, ("table-ack",))
            self._try_send(ctx)
        elif kind == "table-ack":
            self.acked = True


class _AggCoordinator:
    def __init__(self, sim: Simulator, emitter: NodeId, tree: BroadcastTree):
        self.sim = sim
        self.g = sim.graph
        self.emitter = emitter
        self.parents = dict(tree.parent)
        self.children: Dict[NodeId, list] = {v: [] for v in self.g.nodes}
        for child, parent in tree.parent.items():
            self.children[parent].append(child)
        self.result: Optional[SegmentTable] = None
        self.procs: Dict[NodeId, _AggregationNode] = {}
        for v in self.g.nodes:
            proc = _AggregationNode(v, self)
            self.procs[v] = proc
            sim.add_process(proc)

    def emitter_done(self, table: SegmentTable):
        self.result = table
        self.sim.stop()


class _LearnerBridge:
    """Adapts a DistanceLearner to a node process and its context."""

    def __init__(self, ctx, proc: _AggregationNode, learner: DistanceLearner):
        self.ctx = ctx
        self.proc = proc
        self.learner = learner
        learner.on_terminate = self._done

    def _done(self):
        self.proc.learner_done(self.ctx, self.learner.finalize())

    def on_level_changed(self, src, level, proxy, snapshot=False):
        self.learner.on_level_changed(src, level, proxy, snapshot=snapshot)

    def on_date_improved(self, src, date, proxy):
        self.learner.on_date_improved(src, date, proxy)


def aggregate_to_emitter(sim: Simulator, emitter: NodeId,
                         tree: Optional[BroadcastTree] = None,
                         deadline: Optional[Time] = None) -> SegmentTable:
    """Run learners at every node and fold their tables up the tree.

    Returns the emitter's eccentricity table.  `tree` defaults to a
    convergecast tree built by a dedicated flood from the emitter at t=0.
    """
    g = sim.graph
    if emitter not in g.nodes:
        raise GraphError(f"unknown emitter {emitter!r}")
    if tree is None:
        tree = build_convergecast_tree(Simulator(g, record_trace=False), emitter, 0)
    n = len(g.nodes)
    if deadline is None:
        deadline = 3 * n * g.period
    layer = TClockLayer(sim, sources=[emitter])
    coord = _AggCoordinator(sim, emitter, tree)
    # learners start once the event streams are periodic, so each one sees
    # its own first event recur exactly one period later
    start = layer.steady_start(emitter)
    for v in g.nodes:
        if v == emitter:
            continue
        proc = coord.procs[v]
        learner = DistanceLearner(v, emitter, g.period, g.latency,
                                  now_fn=lambda: sim.time)
        bridge = _LearnerBridge(sim.context(v), proc, learner)
        layer.register(v, bridge, at=start)
        sim.schedule_tclock(start + g.period,
                            learner.conclude_constant, ("tclock-quiescent", v))
    deadline = as_time(deadline)
    t = sim.time
    while coord.result is None and t < deadline:
        t = min(t + g.period, deadline)
        sim.run(t)
    if coord.result is None:
        stalled = sorted(v for v, pr in coord.procs.items()
                         if pr.own_table is None or not pr._ready())
        raise BroadcastError(
            f"aggregation incomplete at deadline {deadline}; stalled subtree: {stalled}")
    return coord.result


# -- end-to-end fastest broadcast ----------------------------------------------

def fastest_broadcast(sim: Simulator, emitter: NodeId):
    """(chosenDate, tree, duration): minimize the worst reception delay.

    Aggregates distance tables to the emitter, picks the earliest date of the
    first minimum-eccentricity window, and runs a foremost broadcast at its
    next occurrence.
    """
    g = sim.graph
    ecc = aggregate_to_emitter(sim, emitter)
    m, wins = min_windows(ecc)
    chosen = normalize_date(wins[0][0], g.period)
    # next occurrence of the chosen date (mod p) after the aggregation phase
    k = 0
    while chosen + k * g.period < sim.time:
        k += 1
    start = chosen + k * g.period
    bsim = Simulator(g, record_trace=False)
    tree = foremost_broadcast(bsim, emitter, start)
    duration = max(tree.reception.values()) - start
    return chosen, tree, duration
