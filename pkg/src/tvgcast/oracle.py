"""Centralized full-knowledge journey computations.

Ground truth for foremost/shortest/fastest journeys, temporal views, levels,
distance functions and eccentricity, computed directly from the schedule.
The distributed modules are tested against these.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Dict, Optional, Tuple

from .graph import GraphError, Journey, NodeId, Time, TimeVaryingGraph, as_time, edge_key, normalize_date
from .segments import FLAT, SLOPE, SegmentTable, aggregate, min_windows, zero_table


class UnreachableError(GraphError):
    """Destination admits no journey from the source."""


def _check_node(g: TimeVaryingGraph, v: NodeId):
    if v not in g.nodes:
        raise GraphError(f"unknown node {v!r}")


def _foremost_labels(g: TimeVaryingGraph, u: NodeId, t: Time):
    """Dijkstra over (arrival, hops, node-sequence) labels from u at date t.

    Returns {node: (arrival, hops, parent_info)} where parent_info is
    (prev_node, departure) or None at the source.  Deterministic: ties are
    broken by fewer hops, then lexicographic node sequence.
    """
    t = as_time(t)
    best: Dict[NodeId, tuple] = {}
    heap = [(t, 0, (u,))]
    meta = {(u,): None}
    settled = set()
    while heap:
        arr, hops, seq = heapq.heappop(heap)
        x = seq[-1]
        if x in settled:
            continue
        settled.add(x)
        best[x] = (arr, hops, meta[seq])
        for y in g.neighbors(x):
            if y in settled:
                continue
            s = g.next_transmission((x, y), arr)
            if s is None:
                continue
            nseq = seq + (y,)
            meta[nseq] = (x, s)
            heapq.heappush(heap, (s + g.latency, hops + 1, nseq))
    return best


def _journey_from_labels(g, u, v, t):
    """Rebuild the foremost journey u->v departing >= t, or None."""
    labels = _foremost_labels(g, u, t)
    if v not in labels:
        return None
    # walk parents back from v by re-running the label chain
    hops = []
    arr, nh, parent = labels[v]
    node = v
    while parent is not None:
        prev, dep = parent
        hops.append(((prev, node), dep))
        node = prev
        arr, nh, parent = labels[prev]
    hops.reverse()
    return Journey(tuple(hops))


def earliest_arrival(g: TimeVaryingGraph, u: NodeId, v: NodeId, t) -> Optional[Time]:
    """Minimum arrival over journeys from u to v departing >= t; None if unreachable."""
    _check_node(g, u)
    _check_node(g, v)
    t = as_time(t)
    if t < 0:
        raise GraphError("dates must be nonnegative")
    if u == v:
        return t
    labels = _foremost_labels(g, u, t)
    return labels[v][0] if v in labels else None


def foremost_journey(g: TimeVaryingGraph, u: NodeId, v: NodeId, t) -> Optional[Journey]:
    _check_node(g, u)
    _check_node(g, v)
    return _journey_from_labels(g, u, v, as_time(t))


# -- distance functions ----------------------------------------------------

def _breakpoint_candidates(g: TimeVaryingGraph):
    """Dates at which any temporal distance may change trend (one period)."""
    n = len(g.nodes)
    p, z = g.period, g.latency
    cands = {Fraction(0)}
    for e in g.edges:
        for a, b in g.schedule[e]:
            for x in (a, b):
                cands.add(normalize_date(x, p))
                for k in range(n + 1):
                    cands.add(normalize_date(x - k * z, p))
    return sorted(cands)


_distance_cache: Dict[tuple, Dict[NodeId, SegmentTable]] = {}
_cache_anchors: list = []  # keeps cached graphs alive so ids stay unique


def distance_functions(g: TimeVaryingGraph, u: NodeId) -> Dict[NodeId, SegmentTable]:
    """Exact piecewise distance tables t -> d(u,t,v) for every reachable v.

    Built independently of the event-driven learner: earliest arrivals are
    probed inside every gap between candidate breakpoints and the flat/slope
    runs are reconstructed, then collinear runs are merged (including across
    the period wrap).  Results are memoized per (graph, source).
    """
    _check_node(g, u)
    key = (id(g), u)
    cached = _distance_cache.get(key)
    if cached is not None:
        return dict(cached)
    out = _distance_functions(g, u)
    _distance_cache[key] = out
    _cache_anchors.append(g)
    return dict(out)


def _distance_functions(g: TimeVaryingGraph, u: NodeId) -> Dict[NodeId, SegmentTable]:
    p = g.period
    cands = _breakpoint_candidates(g)
    gaps = []
    for i, c in enumerate(cands):
        nxt = cands[i + 1] if i + 1 < len(cands) else cands[0] + p
        if nxt > c:
            gaps.append((c, nxt))
    rows: Dict[NodeId, list] = {v: [] for v in g.nodes if v != u}
    dead = set()
    for c, nxt in gaps:
        w = nxt - c
        t1, t2 = c + w / 3, c + 2 * w / 3
        l1 = _foremost_labels(g, u, t1)
        l2 = _foremost_labels(g, u, t2)
        for v in rows:
            if v in dead:
                continue
            if v not in l1 or v not in l2:
                dead.add(v)
                continue
            d1 = l1[v][0] - t1
            d2 = l2[v][0] - t2
            if d1 == d2:
                rows[v].append((c, d1, FLAT))
            elif d1 - d2 == t2 - t1:
                rows[v].append((c, d1 + (t1 - c), SLOPE))
            else:
                raise AssertionError(f"non-linear distance piece for {u}->{v} on [{c},{nxt})")
    out = {}
    for v, entries in rows.items():
        if v in dead or not entries:
            continue
        tbl = SegmentTable.of(entries, p).canonicalize().merge_wrap()
        out[v] = tbl
    return out


def distance_function(g: TimeVaryingGraph, u: NodeId, v: NodeId) -> SegmentTable:
    """Distance table for one (source, destination) pair; errors if unreachable."""
    _check_node(g, v)
    if u == v:
        raise GraphError("distance function requires distinct nodes")
    tbl = distance_functions(g, u).get(v)
    if tbl is None:
        raise UnreachableError(f"{v!r} unreachable from {u!r}")
    return tbl


def eccentricity_function(g: TimeVaryingGraph, u: NodeId) -> SegmentTable:
    """Max of distance tables over all other nodes, folded onto the 0-flat table."""
    _check_node(g, u)
    tables = distance_functions(g, u)
    missing = [v for v in g.nodes if v != u and v not in tables]
    if missing:
        raise UnreachableError(f"nodes unreachable from {u!r}: {missing}")
    acc = zero_table(g.period)
    for v in sorted(tables):
        acc = aggregate(acc, tables[v])
    return acc


# -- temporal views and levels ----------------------------------------------

def temporal_view(g: TimeVaryingGraph, u: NodeId, v: NodeId, t) -> Optional[Time]:
    """Latest emission date at u whose message can have reached v by time t.

    Each table segment repeats every period; per segment the best repeat is
    found in closed form.  Repeat k of a flat segment carries continuum
    departures [max(a+kp, 0), b+kp] (closed) with receptions shifted by the
    value; a slope repeat's journeys all arrive at a+kp+value and its
    achieving departure is b+kp.  Only the k = -1 repeat can start below
    zero, since table dates lie in [0, p).
    """
    _check_node(g, u)
    _check_node(g, v)
    if u == v:
        raise GraphError("temporal view requires distinct nodes")
    t = as_time(t)
    tbl = distance_functions(g, u).get(v)
    if tbl is None:
        return None
    p = tbl.period
    best = None
    for i, s in enumerate(tbl.entries):
        a, b = tbl.span_of(i)
        val = s.value
        k = (t - val - a) // p  # largest repeat whose first arrival is <= t
        if s.trend == SLOPE:
            if k >= 0:
                cand = b + k * p
            elif k == -1 and b >= p:
                cand = b - p
            else:
                continue
        else:
            if k >= 0:
                cand = min(t - val, b + k * p)
            elif t >= val and b >= p:
                cand = min(t - val, b - p)
            else:
                continue
        if best is None or cand > best:
            best = cand
    return best


def level(g: TimeVaryingGraph, u: NodeId, v: NodeId, t) -> Optional[int]:
    """Min hop count of a direct journey from u arriving at v exactly at t.

    None encodes the no-direct-journey case.  Brute-force backward search,
    independent of the event layer.
    """
    _check_node(g, u)
    _check_node(g, v)
    if u == v:
        raise GraphError("level requires distinct nodes")
    t = as_time(t)
    z = g.latency
    reach = {v}
    k = 0
    while reach and (k + 1) * z <= t:
        k += 1
        lo = t - k * z
        nxt = set()
        for x in reach:
            for w in g.neighbors(x):
                if g.is_present_throughout((w, x), lo, lo + z):
                    nxt.add(w)
        if u in nxt:
            return k
        reach = nxt
    return None


# -- shortest / fastest ------------------------------------------------------

def shortest_journey(g: TimeVaryingGraph, u: NodeId, v: NodeId, t) -> Optional[Journey]:
    """A min-hop journey departing >= t (ties: earlier arrival, then node order)."""
    _check_node(g, u)
    _check_node(g, v)
    t = as_time(t)
    if u == v:
        return Journey(())
    n = len(g.nodes)
    # frontier[x] = (arrival, node_seq, hops_list) best exactly-k-hop state
    frontier = {u: (t, (u,), ())}
    for k in range(1, n):
        nxt: Dict[NodeId, tuple] = {}
        for x, (arr, seq, hops) in sorted(frontier.items()):
            for y in g.neighbors(x):
                s = g.next_transmission((x, y), arr)
                if s is None:
                    continue
                cand = (s + g.latency, seq + (y,), hops + (((x, y), s),))
                if y not in nxt or cand[:2] < nxt[y][:2]:
                    nxt[y] = cand
        if v in nxt:
            return Journey(nxt[v][2])
        frontier = nxt
        if not frontier:
            break
    return None


def fastest_journey(g: TimeVaryingGraph, u: NodeId, v: NodeId, t):
    """(journey, duration) minimizing duration over departures >= t, or None."""
    _check_node(g, u)
    _check_node(g, v)
    if u == v:
        raise GraphError("fastest journey requires distinct nodes")
    t = as_time(t)
    tbl = distance_functions(g, u).get(v)
    if tbl is None:
        return None
    m, wins = min_windows(tbl)
    p = tbl.period
    # earliest absolute departure >= t whose date mod p lies in a window
    dep = None
    for k in range(int(t // p), int(t // p) + 3):
        for lo, hi in wins:
            cands = [lo + k * p] if lo == hi else [max(lo + k * p, t)]
            for c in cands:
                if c >= t and (lo == hi or c < hi + k * p):
                    dep = c if dep is None or c < dep else dep
        if dep is not None:
            break
    assert dep is not None
    j = _journey_from_labels(g, u, v, dep)
    arr = j.hops[-1][1] + g.latency
    dur = arr - j.departure
    assert dur == m, (dur, m)
    return j, dur
