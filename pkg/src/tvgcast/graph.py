"""Periodic time-varying graph model: presence schedules, journeys, metrics.

All times are exact rationals (`fractions.Fraction`).  Presence intervals
are right-open `[start, end)` and interpreted periodically with period `p`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Tuple

Time = Fraction
NodeId = str
Edge = Tuple[NodeId, NodeId]


class GraphError(ValueError):
    """Malformed graph, edge, or query."""


class InvalidJourneyError(ValueError):
    """Operation requires a valid journey."""


def as_time(x) -> Time:
    """Coerce ints/strings/Fractions to an exact rational time."""
    return Fraction(x)


def edge_key(u: NodeId, v: NodeId) -> Edge:
    """Canonical (sorted) form of an undirected edge."""
    if u == v:
        raise GraphError(f"self-loop {u!r}-{v!r} not allowed")
    return (u, v) if u < v else (v, u)


def normalize_date(t: Time, p: Time) -> Time:
    """Reduce a date modulo the period, into [0, p)."""
    if p <= 0:
        raise GraphError("period must be positive")
    return t - (t // p) * p


def _canonical_intervals(raw: Iterable[Tuple[Time, Time]], p: Time):
    """Sort, validate and merge adjacent presence intervals within [0, p)."""
    ivs = sorted((as_time(a), as_time(b)) for a, b in raw)
    merged: list[tuple[Time, Time]] = []
    for a, b in ivs:
        if a >= b:
            raise GraphError(f"empty or reversed interval [{a}, {b})")
        if a < 0 or b > p:
            raise GraphError(f"interval [{a}, {b}) not contained in [0, {p})")
        if merged and a < merged[-1][1]:
            raise GraphError(f"overlapping intervals near [{a}, {b})")
        if merged and a == merged[-1][1]:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return tuple(merged)


@dataclass(frozen=True)
class TimeVaryingGraph:
    """Undirected graph with periodic edge presence and constant latency.

    `schedule` maps canonical edges to merged, disjoint, sorted right-open
    intervals within one period.  Immutable after construction.
    """

    nodes: tuple
    schedule: Mapping[Edge, tuple]
    period: Time
    latency: Time

    @staticmethod
    def build(nodes: Iterable[NodeId], schedule: Mapping, period, latency) -> "TimeVaryingGraph":
        p = as_time(period)
        z = as_time(latency)
        if p <= 0:
            raise GraphError("period must be positive")
        if z <= 0:
            raise GraphError("latency must be positive")
        node_t = tuple(sorted(set(nodes)))
        node_set = set(node_t)
        sched: dict[Edge, tuple] = {}
        for e, ivs in schedule.items():
            u, v = e
            if u not in node_set or v not in node_set:
                raise GraphError(f"edge {e!r} references unknown node")
            k = edge_key(u, v)
            if k in sched:
                raise GraphError(f"duplicate edge {k!r}")
            sched[k] = _canonical_intervals(ivs, p)
        return TimeVaryingGraph(node_t, sched, p, z)

    @property
    def edges(self) -> tuple:
        return tuple(sorted(self.schedule))

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return edge_key(u, v) in self.schedule

    def neighbors(self, v: NodeId):
        return sorted(b if a == v else a for (a, b) in self.schedule if v in (a, b))

    def intervals(self, e: Edge) -> tuple:
        k = edge_key(*e)
        try:
            return self.schedule[k]
        except KeyError:
            raise GraphError(f"unknown edge {k!r}") from None

    # -- presence ---------------------------------------------------------

    def is_present(self, e: Edge, t: Time) -> bool:
        """True iff the edge is present at date t (t taken modulo p)."""
        t = as_time(t)
        if t < 0:
            raise GraphError("dates must be nonnegative")
        tm = normalize_date(t, self.period)
        return any(a <= tm < b for a, b in self.intervals(e))

    def _covers(self, ivs, a: Time, b: Time) -> bool:
        """Is [a, b) within one period covered, allowing wrap at p via caller?"""
        if a == b:
            return True
        for lo, hi in ivs:
            if lo <= a and b <= hi:
                return True
        return False

    def is_present_throughout(self, e: Edge, t1: Time, t2: Time) -> bool:
        """True iff the edge is continuously present during [t1, t2)."""
        t1, t2 = as_time(t1), as_time(t2)
        if t1 > t2:
            raise GraphError("t1 must not exceed t2")
        if t1 == t2:
            return True
        ivs = self.intervals(e)
        p = self.period
        if t2 - t1 > p:
            return self._covers(ivs, Fraction(0), p)
        a = normalize_date(t1, p)
        b = a + (t2 - t1)
        if b <= p:
            return self._covers(ivs, a, b)
        return self._covers(ivs, a, p) and self._covers(ivs, Fraction(0), b - p)

    # -- transmissions ----------------------------------------------------

    def transmission_start_windows(self, e: Edge, periods: int = 2):
        """Closed windows [s, t] of feasible transmission start dates.

        A transmission starting at s needs presence over [s, s+latency); with
        wrap-adjacency the window may begin late in the period.  Windows are
        reported unrolled with start dates below `periods` periods so callers
        can reduce modulo p.
        """
        cache = self.__dict__.get("_window_cache")
        if cache is None:
            cache = {}
            object.__setattr__(self, "_window_cache", cache)
        ck = (edge_key(*e), periods)
        hit = cache.get(ck)
        if hit is not None:
            return hit
        ivs = self.intervals(e)
        p, z = self.period, self.latency
        # unroll and merge across period boundaries
        unrolled: list[tuple[Time, Time]] = []
        for k in range(periods + 1):
            for a, b in ivs:
                lo, hi = a + k * p, b + k * p
                if unrolled and lo == unrolled[-1][1]:
                    unrolled[-1] = (unrolled[-1][0], hi)
                else:
                    unrolled.append((lo, hi))
        wins = []
        for lo, hi in unrolled:
            if hi - lo >= z and lo < periods * p:
                wins.append((lo, hi - z))
        cache[ck] = wins
        return wins

    def next_transmission(self, e: Edge, t: Time):
        """Earliest s >= t such that the edge is present over [s, s+latency).

        Returns None if the edge never admits a transmission.
        """
        t = as_time(t)
        p = self.period
        t0 = normalize_date(t, p)
        base = t - t0
        best = None
        for lo, hi in self.transmission_start_windows(e):
            s = max(t0, lo)
            if s <= hi:
                best = base + s
                break
        return best

    def edge_usable(self, e: Edge) -> bool:
        """Does the edge ever admit a full transmission?"""
        return bool(self.transmission_start_windows(e))


@dataclass(frozen=True)
class Journey:
    """A path over time: ordered (directed hop, departure date) couples."""

    hops: tuple  # of ((tail, head), Time)

    @staticmethod
    def of(*hops) -> "Journey":
        return Journey(tuple(((u, v), as_time(t)) for (u, v), t in hops))

    @property
    def departure(self) -> Time:
        return self.hops[0][1]

    def nodes(self):
        seq = [self.hops[0][0][0]]
        for (u, v), _ in self.hops:
            seq.append(v)
        return seq


def validate_journey(g: TimeVaryingGraph, j: Journey) -> bool:
    """Check the walk, spacing and presence invariants against g."""
    if not j.hops:
        return False
    z = g.latency
    prev_head = None
    prev_t = None
    for (u, v), t in j.hops:
        if u not in g.nodes or v not in g.nodes or not g.has_edge(u, v):
            return False
        if t < 0:
            return False
        if prev_head is not None:
            if u != prev_head or prev_t + z > t:
                return False
        if not g.is_present_throughout((u, v), t, t + z):
            return False
        prev_head, prev_t = v, t
    return True


def journey_metrics(g: TimeVaryingGraph, j: Journey):
    """(hops, duration, departure, arrival) of a valid journey."""
    if not validate_journey(g, j):
        raise InvalidJourneyError("journey violates graph constraints")
    dep = j.hops[0][1]
    arr = j.hops[-1][1] + g.latency
    return len(j.hops), arr - dep, dep, arr


def is_direct_journey(g: TimeVaryingGraph, j: Journey) -> bool:
    """True iff every hop departs exactly when the previous one arrives."""
    if not validate_journey(g, j):
        raise InvalidJourneyError("journey violates graph constraints")
    z = g.latency
    for ((_, t1), (_, t2)) in zip(j.hops, j.hops[1:]):
        if t2 != t1 + z:
            return False
    return True
