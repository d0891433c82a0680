"""Line-oriented scenario files: graph schedule plus run parameters.

Format (whitespace-separated tokens, `#` starts a comment):

    period 100
    latency 1
    node a
    node b
    edge a b [0,30) [70,80)
    emitter a            # optional
    offset b 1/2         # optional per-node clock offset
    register b 50        # optional per-node registration date
    until 400            # optional run horizon

Times are integers, exact decimals, or `num/den` rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from .graph import GraphError, NodeId, Time, TimeVaryingGraph, as_time
from .sim import format_time


class ScenarioError(ValueError):
    """Malformed scenario text; carries a line number for syntax errors."""


@dataclass(frozen=True)
class Scenario:
    graph: TimeVaryingGraph
    clock_offsets: Dict[NodeId, Time] = field(default_factory=dict)
    emitter: Optional[NodeId] = None
    registration_times: Dict[NodeId, Time] = field(default_factory=dict)
    until_time: Optional[Time] = None

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.graph == other.graph
                and self.clock_offsets == other.clock_offsets
                and self.emitter == other.emitter
                and self.registration_times == other.registration_times
                and self.until_time == other.until_time)


def _parse_time(tok: str, lineno: int) -> Time:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"line {lineno}: invalid time {tok!r}") from None


def _parse_interval(tok: str, lineno: int) -> Tuple[Time, Time]:
    if not (tok.startswith("[") and tok.endswith(")")) or "," not in tok:
        raise ScenarioError(f"line {lineno}: invalid interval {tok!r}, expected [a,b)")
    a, _, b = tok[1:-1].partition(",")
    return _parse_time(a, lineno), _parse_time(b, lineno)


def parse_scenario(text: str) -> Scenario:
    period = latency = None
    nodes: list = []
    edges: Dict[tuple, list] = {}
    offsets: Dict[NodeId, Time] = {}
    registrations: Dict[NodeId, Time] = {}
    emitter = None
    until = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        key, args = toks[0], toks[1:]

        def need(n):
            if len(args) != n:
                raise ScenarioError(
                    f"line {lineno}: {key!r} takes {n} argument(s), got {len(args)}")

        if key == "period":
            need(1)
            period = _parse_time(args[0], lineno)
        elif key == "latency":
            need(1)
            latency = _parse_time(args[0], lineno)
        elif key == "node":
            need(1)
            if args[0] in nodes:
                raise ScenarioError(f"line {lineno}: duplicate node {args[0]!r}")
            nodes.append(args[0])
        elif key == "edge":
            if len(args) < 3:
                raise ScenarioError(
                    f"line {lineno}: 'edge' needs two nodes and at least one interval")
            u, v = args[0], args[1]
            if (u, v) in edges or (v, u) in edges:
                raise ScenarioError(f"line {lineno}: duplicate edge {u!r}-{v!r}")
            edges[(u, v)] = [_parse_interval(t, lineno) for t in args[2:]]
        elif key == "emitter":
            need(1)
            emitter = args[0]
        elif key == "until":
            need(1)
            until = _parse_time(args[0], lineno)
        elif key == "offset":
            need(2)
            offsets[args[0]] = _parse_time(args[1], lineno)
        elif key == "register":
            need(2)
            registrations[args[0]] = _parse_time(args[1], lineno)
        else:
            raise ScenarioError(f"line {lineno}: unknown directive {key!r}")
    if period is None:
        raise ScenarioError("missing 'period' line")
    if latency is None:
        raise ScenarioError("missing 'latency' line")
    try:
        graph = TimeVaryingGraph.build(nodes, edges, period, latency)
    except GraphError as exc:
        raise ScenarioError(str(exc)) from exc
    node_set = set(graph.nodes)
    for name, what in [(emitter, "emitter")]:
        if name is not None and name not in node_set:
            raise ScenarioError(f"{what} {name!r} is not a declared node")
    for m, what in [(offsets, "offset"), (registrations, "register")]:
        for v, t in m.items():
            if v not in node_set:
                raise ScenarioError(f"{what} references unknown node {v!r}")
            if t < 0:
                raise ScenarioError(f"{what} time for {v!r} must be nonnegative")
    if until is not None and until < 0:
        raise ScenarioError("'until' must be nonnegative")
    return Scenario(graph, offsets, emitter, registrations, until)


def serialize_scenario(s: Scenario) -> str:
    g = s.graph
    lines = [f"period {format_time(g.period)}", f"latency {format_time(g.latency)}"]
    for v in g.nodes:
        lines.append(f"node {v}")
    for e in g.edges:
        ivs = " ".join(f"[{format_time(a)},{format_time(b)})" for a, b in g.schedule[e])
        lines.append(f"edge {e[0]} {e[1]} {ivs}")
    for v in sorted(s.clock_offsets):
        lines.append(f"offset {v} {format_time(s.clock_offsets[v])}")
    if s.emitter is not None:
        lines.append(f"emitter {s.emitter}")
    for v in sorted(s.registration_times):
        lines.append(f"register {v} {format_time(s.registration_times[v])}")
    if s.until_time is not None:
        lines.append(f"until {format_time(s.until_time)}")
    return "\n".join(lines) + "\n"
