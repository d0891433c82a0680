"""Deterministic continuous-time discrete-event simulator.

Executes node processes over a TimeVaryingGraph: edge appearance and
disappearance events, message transmission with constant latency, and loss
when the edge disappears mid-transmission.  Same-time ordering is
message-delivery, edge-disappear, edge-appear, tclock, timer; within a kind,
insertion order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from .graph import NodeId, Time, TimeVaryingGraph, as_time, edge_key

K_DELIVERY = 0
K_DISAPPEAR = 1
K_APPEAR = 2
K_TCLOCK = 3
K_TIMER = 4

_KIND_NAMES = {
    K_DELIVERY: "message-delivery",
    K_DISAPPEAR: "edge-disappear",
    K_APPEAR: "edge-appear",
    K_TCLOCK: "tclock",
    K_TIMER: "timer",
}


class SimulationError(RuntimeError):
    """A handler raised; the offending event is attached."""

    def __init__(self, event, cause):
        super().__init__(f"handler failed at {event}: {cause!r}")
        self.event = event
        self.cause = cause


def format_time(t: Time) -> str:
    t = Fraction(t)
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


def _fmt_field(x) -> str:
    if isinstance(x, Fraction):
        return format_time(x)
    if isinstance(x, tuple):
        return "-".join(str(i) for i in x)
    if x is None:
        return "none"
    return str(x)


@dataclass
class SimEvent:
    time: Time
    kind: int
    payload: tuple
    sequence: int

    def trace_line(self) -> str:
        if self.kind == K_TCLOCK:
            kind, fields = self.payload[0], self.payload[1:]
        else:
            kind, fields = _KIND_NAMES[self.kind], self.payload
        detail = " ".join(_fmt_field(x) for x in fields)
        return f"{format_time(self.time)} {kind} {detail}".rstrip()


class NodeProcess:
    """Base class for per-node protocol logic; override the handlers used."""

    def __init__(self, node: NodeId):
        self.node = node

    def on_start(self, ctx):
        pass

    def on_edge_appear(self, ctx, neighbor: NodeId):
        pass

    def on_edge_disappear(self, ctx, neighbor: NodeId):
        pass

    def on_message(self, ctx, sender: NodeId, payload):
        pass

    def on_timer(self, ctx, tag):
        pass


class Context:
    """Node-local view of the simulator: local clock, send, timers."""

    def __init__(self, sim: "Simulator", node: NodeId):
        self._sim = sim
        self.node = node
        self.offset = sim.clock_offsets.get(node, Fraction(0))

    def now(self) -> Time:
        return self._sim.time + self.offset

    def local_schedule(self, neighbor: NodeId):
        """Presence intervals of the incident edge (learnable from periodicity)."""
        return self._sim.graph.intervals((self.node, neighbor))

    def edge_usable(self, neighbor: NodeId) -> bool:
        return self._sim.graph.edge_usable((self.node, neighbor))

    def can_send(self, to: NodeId) -> bool:
        """Would a transmission started now complete?  Local knowledge: the
        node knows its incident schedule, not the fate of past sends."""
        g = self._sim.graph
        t = self._sim.time
        return g.is_present_throughout(edge_key(self.node, to), t, t + g.latency)

    def send(self, to: NodeId, payload) -> bool:
        """Send over the incident edge now; silently lost unless the edge
        stays present for a full latency.  Returns acceptance (callers
        building protocols should rely on acknowledgments instead)."""
        return self._sim._send(self.node, to, payload)

    def set_timer(self, fire_at, tag=None):
        return self._sim._set_timer(self.node, as_time(fire_at) - self.offset, tag)

    def cancel_timer(self, handle):
        self._sim._cancel_timer(handle)

    def at_instant_end(self, fn: Callable[[], None]):
        self._sim._instant_end.append(fn)


class Simulator:
    def __init__(self, graph: TimeVaryingGraph, clock_offsets: Optional[Dict[NodeId, Time]] = None,
                 record_trace: bool = True):
        self.graph = graph
        self.clock_offsets = {k: as_time(v) for k, v in (clock_offsets or {}).items()}
        self.record_trace = record_trace
        self.trace: List[str] = []
        self.time: Time = Fraction(0)
        self._heap: list = []
        self._seq = 0
        self._processes: Dict[NodeId, NodeProcess] = {}
        self._contexts: Dict[NodeId, Context] = {}
        self._cancelled = set()
        self._instant_end: List[Callable[[], None]] = []
        self._tclock_callbacks: Dict[int, Callable] = {}
        self._stop_requested = False
        self._layers: list = []
        self._edge_horizon: Time = Fraction(0)
        self._started: set = set()

    # -- wiring -----------------------------------------------------------

    def add_process(self, proc: NodeProcess):
        if proc.node not in self.graph.nodes:
            raise ValueError(f"unknown node {proc.node!r}")
        if proc.node in self._processes:
            raise ValueError(f"duplicate process for {proc.node!r}")
        self._processes[proc.node] = proc
        self._contexts[proc.node] = Context(self, proc.node)

    def add_layer(self, layer):
        """Attach an event layer; its prepare(until) runs at the start of run()."""
        self._layers.append(layer)

    def context(self, node: NodeId) -> Context:
        if node not in self._contexts:
            self._contexts[node] = Context(self, node)
        return self._contexts[node]

    def _push(self, time: Time, kind: int, payload: tuple) -> int:
        self._seq += 1
        heapq.heappush(self._heap, (time, kind, self._seq, payload))
        return self._seq

    def schedule_tclock(self, time: Time, callback: Callable, payload: tuple):
        seq = self._push(time, K_TCLOCK, payload)
        self._tclock_callbacks[seq] = callback

    # -- node-facing operations --------------------------------------------

    def _send(self, frm: NodeId, to: NodeId, payload) -> bool:
        e = edge_key(frm, to)  # raises on self-loop; validates below
        if e not in self.graph.schedule:
            raise ValueError(f"no edge {frm!r}-{to!r}")
        t = self.time
        if not self.graph.is_present_throughout(e, t, t + self.graph.latency):
            return False  # lost, silently
        self._push(t + self.graph.latency, K_DELIVERY, (to, frm, payload))
        return True

    def _set_timer(self, node: NodeId, fire_at: Time, tag) -> int:
        if fire_at < self.time:
            raise ValueError("timer deadline already passed")
        return self._push(fire_at, K_TIMER, (node, tag))

    def _cancel_timer(self, handle: int):
        self._cancelled.add(handle)

    def stop(self):
        """Request the run loop to stop after the current instant."""
        self._stop_requested = True

    def skip_to(self, t):
        """Fast-forward an idle simulator to time t.

        Nothing from the skipped span is replayed, so this is only allowed
        before any event has been scheduled or processed.
        """
        t = as_time(t)
        if self._heap or self._started or self.time != 0 or self._edge_horizon != 0:
            raise ValueError("can only skip forward on an untouched simulator")
        self.time = t
        self._edge_horizon = t

    # -- edge events --------------------------------------------------------

    def _schedule_edge_events(self, lo: Time, until: Time):
        p = self.graph.period
        for e in self.graph.edges:
            ivs = self.graph.schedule[e]
            if not ivs:
                continue
            full = len(ivs) == 1 and ivs[0] == (Fraction(0), p)
            if full:
                continue
            wrap = ivs[0][0] == 0 and ivs[-1][1] == p
            k = max(0, int(lo // p) - 1)
            while k * p < until:
                for a, b in ivs:
                    ta, tb = a + k * p, b + k * p
                    skip_appear = wrap and a == 0 and k > 0
                    skip_disappear = wrap and b == p
                    if not skip_appear and lo <= ta < until:
                        self._push(ta, K_APPEAR, (e,))
                    if not skip_disappear and lo <= tb < until:
                        self._push(tb, K_DISAPPEAR, (e,))
                k += 1

    # -- main loop ----------------------------------------------------------

    def _record(self, ev: SimEvent):
        if self.record_trace:
            self.trace.append(ev.trace_line())

    def _dispatch(self, ev: SimEvent):
        try:
            if ev.kind in (K_APPEAR, K_DISAPPEAR):
                (u, v) = ev.payload[0]
                for node, other in ((u, v), (v, u)):
                    proc = self._processes.get(node)
                    if proc is not None:
                        ctx = self._contexts[node]
                        if ev.kind == K_APPEAR:
                            proc.on_edge_appear(ctx, other)
                        else:
                            proc.on_edge_disappear(ctx, other)
            elif ev.kind == K_DELIVERY:
                to, frm, payload = ev.payload
                proc = self._processes.get(to)
                if proc is not None:
                    proc.on_message(self._contexts[to], frm, payload)
            elif ev.kind == K_TIMER:
                node, tag = ev.payload
                if ev.sequence not in self._cancelled:
                    proc = self._processes.get(node)
                    if proc is not None:
                        proc.on_timer(self._contexts[node], tag)
            elif ev.kind == K_TCLOCK:
                cb = self._tclock_callbacks.pop(ev.sequence, None)
                if cb is not None:
                    cb()
        except SimulationError:
            raise
        except Exception as exc:
            raise SimulationError(ev, exc) from exc

    def run(self, until) -> List[str]:
        """Process all events with time < until; returns the trace lines.

        May be called again with a larger horizon to continue the same run
        (later protocol phases); already-elapsed time is never replayed.
        """
        until = as_time(until)
        self._stop_requested = False
        if until > self._edge_horizon:
            self._schedule_edge_events(self._edge_horizon, until)
            self._edge_horizon = until
        for layer in self._layers:
            layer.prepare(until)
        for node in sorted(self._processes):
            if node not in self._started:
                self._started.add(node)
                self._processes[node].on_start(self._contexts[node])
        while self._heap and not self._stop_requested:
            t = self._heap[0][0]
            if t >= until:
                break
            # process the whole instant, then instant-end callbacks
            while self._heap and self._heap[0][0] == t:
                time, kind, seq, payload = heapq.heappop(self._heap)
                self.time = time
                ev = SimEvent(time, kind, payload, seq)
                if kind == K_TIMER and seq in self._cancelled:
                    continue
                self._record(ev)
                self._dispatch(ev)
                if not self._heap or self._heap[0][0] != t:
                    while self._instant_end:
                        fns, self._instant_end = self._instant_end, []
                        for fn in fns:
                            fn()
        return self.trace
