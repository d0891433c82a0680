"""Per-node tracking of direct views (levels) and indirect views (dates).

An event layer between the simulator and a higher algorithm.  For every
(node, source) pair it delivers:

- ``levelChanged(src, level, proxy)`` whenever the minimum hop count of a
  direct journey currently arriving from the source — or the neighbor
  relaying it — changes; ``level`` is +inf with proxy ``None`` when no
  direct journey arrives.
- ``dateImproved(src, date, proxy)`` whenever an indirect journey reveals an
  emission date strictly larger than the current direct view
  ``now() - level*latency``.

The internal message protocol is out of scope; the layer derives the exact
event times and payloads from the schedule and delivers them as simulator
events at the local node.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .graph import NodeId, Time, TimeVaryingGraph, as_time, edge_key, normalize_date
from .oracle import distance_functions, foremost_journey
from .segments import SLOPE

INF = float("inf")


class TClockError(RuntimeError):
    pass


# -- closed-interval set utilities -------------------------------------------

def _merge(ivs: List[tuple]) -> List[tuple]:
    """Union of closed intervals, merged and sorted."""
    out: List[tuple] = []
    for a, b in sorted(ivs):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _intersect(xs: List[tuple], ys: List[tuple]) -> List[tuple]:
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        a = max(xs[i][0], ys[j][0])
        b = min(xs[i][1], ys[j][1])
        if a <= b:
            out.append((a, b))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _subtract(xs: List[tuple], ys: List[tuple]) -> List[tuple]:
    """Set difference of closed-interval unions (result open ends snapped:
    kept as closed intervals; degenerate leftovers of zero length retained)."""
    out = []
    for a, b in xs:
        pieces = [(a, b)]
        for c, d in ys:
            nxt = []
            for lo, hi in pieces:
                if d < lo or c > hi:
                    nxt.append((lo, hi))
                    continue
                if c > lo:
                    nxt.append((lo, c))
                if d < hi:
                    nxt.append((d, hi))
            pieces = nxt
            if not pieces:
                break
        out.extend(pieces)
    return _merge(out) if out else []


def _member(ivs: List[tuple], t) -> bool:
    return any(a <= t <= b for a, b in ivs)


def _shift(ivs: List[tuple], d) -> List[tuple]:
    return [(a + d, b + d) for a, b in ivs]


def _clip(ivs: List[tuple], lo, hi) -> List[tuple]:
    return [(max(a, lo), min(b, hi)) for a, b in ivs if max(a, lo) <= min(b, hi)]


# -- timelines ----------------------------------------------------------------

@dataclass(frozen=True)
class _Change:
    """Piecewise-constant (level, proxy) change point.

    ``at_instant`` is True when the new value already holds at time t itself
    (closed left endpoint) rather than only just after it.
    """
    time: Time
    level: object  # int or INF
    proxy: Optional[NodeId]
    at_instant: bool


def _direct_arrival_fronts(g: TimeVaryingGraph, u: NodeId, horizon: Time):
    """Per node: fronts (k, intervals) of first-time exact-k-hop
    direct-journey arrivals from u, plus per-round neighbor contributions.

    Returns (fronts, contribs, deepest) where fronts[v] = [(k, ivs), ...],
    contribs[v][k] = [(neighbor, arrival intervals), ...], and deepest is the
    largest k that produced a new arrival anywhere (0 if none).
    """
    z = g.latency
    periods = int(horizon // g.period) + 1
    windows = {e: _clip(_merge([(lo, hi) for lo, hi in g.transmission_start_windows(e, periods)]),
                        Fraction(0), horizon)
               for e in g.edges}
    covered: Dict[NodeId, List[tuple]] = {v: [] for v in g.nodes}
    fronts: Dict[NodeId, list] = {v: [] for v in g.nodes}
    contribs: Dict[NodeId, dict] = {v: {} for v in g.nodes}
    frontier: Dict[NodeId, List[tuple]] = {u: [(Fraction(0), horizon)]}
    covered[u] = [(Fraction(0), horizon)]
    k = 0
    max_rounds = int(2 * horizon / z) + 2
    while frontier and k <= max_rounds:
        k += 1
        arrivals: Dict[NodeId, List[tuple]] = {}
        per_neighbor: Dict[NodeId, list] = {}
        for x, ivs in sorted(frontier.items()):
            for y in g.neighbors(x):
                starts = _intersect(ivs, windows[edge_key(x, y)])
                if not starts:
                    continue
                arr = _clip(_shift(starts, z), Fraction(0), horizon)
                if not arr:
                    continue
                arrivals.setdefault(y, []).extend(arr)
                per_neighbor.setdefault(y, []).append((x, arr))
        frontier = {}
        for y, ivs in arrivals.items():
            new = _subtract(_merge(ivs), covered[y])
            if per_neighbor.get(y):
                contribs[y][k] = per_neighbor[y]
            if not new:
                continue
            fronts[y].append((k, new))
            covered[y] = _merge(covered[y] + new)
            frontier[y] = new
    deepest = max((k for v in g.nodes for k, _ in fronts[v]), default=0)
    return fronts, contribs, deepest


def _level_timeline(g, v, fronts, contribs, horizon) -> List[_Change]:
    """Exact (level, proxy) step function of v as a list of change points."""
    z = g.latency
    crit = {Fraction(0), horizon}
    for k, per in contribs[v].items():
        for _, ivs in per:
            for a, b in ivs:
                crit.update((a, b))
    for _, ivs in fronts[v]:
        for a, b in ivs:
            crit.update((a, b))
    pts = sorted(t for t in crit if 0 <= t <= horizon)

    def eval_at(t):
        lv = INF
        for k, ivs in fronts[v]:
            if _member(ivs, t):
                lv = k
                break
        if lv is INF:
            return (INF, None)
        proxy = None
        for x, ivs in contribs[v].get(lv, ()):
            if _member(ivs, t):  # contribution intervals are arrival times
                proxy = x
                break
        return (lv, proxy)

    changes: List[_Change] = []
    prev = None
    for i, t in enumerate(pts):
        pieces = [(t, True, eval_at(t))]
        if i + 1 < len(pts):
            mid = (t + pts[i + 1]) / 2
            pieces.append((t, False, eval_at(mid)))
        for when, at_instant, val in pieces:
            if prev is None or val != prev:
                changes.append(_Change(when, val[0], val[1], at_instant))
                prev = val
    return changes


def _timeline_value(changes: List[_Change], period: Time, steady: Time, t: Time):
    """Instantaneous (level, proxy) at absolute time t.

    The step function is periodic from `steady` onward: a k-hop direct
    journey lasts exactly k*latency, so once no journey alive at t can have
    departed before 0, values repeat every period.
    """
    t = as_time(t)
    if t >= steady + period:
        t = steady + normalize_date(t - steady, period)
    best = None
    for c in changes:
        if c.time < t or (c.time == t and c.at_instant):
            best = c
        elif c.time > t:
            break
    if best is None:
        return (INF, None)
    return (best.level, best.proxy)


# -- the layer ----------------------------------------------------------------

class TClockLayer:
    """Schedules levelChanged / dateImproved deliveries inside a simulator.

    ``sources`` restricts tracking to the given source nodes (default: all).
    Observers are attached with register(); each receives an immediate
    snapshot levelChanged for every source whose level is finite.
    """

    def __init__(self, sim, sources=None):
        self.sim = sim
        self.g = sim.graph
        if sources is None:
            sources = self.g.nodes
        unknown = [s for s in sources if s not in self.g.nodes]
        if unknown:
            raise TClockError(f"unknown sources {unknown}")
        self.sources = tuple(sorted(set(sources)))
        self._observers: Dict[NodeId, object] = {}
        self._registrations: List[tuple] = []
        self._timelines: Dict[Tuple[NodeId, NodeId], List[_Change]] = {}
        self._steady: Dict[NodeId, Time] = {}
        self._prepared_until: Time = Fraction(0)
        sim.add_layer(self)

    def register(self, node: NodeId, observer, at=0):
        if node not in self.g.nodes:
            raise TClockError(f"unknown node {node!r}")
        if any(n == node for n, _, _ in self._registrations) or node in self._observers:
            raise TClockError(f"observer already registered at {node!r}")
        self._registrations.append((node, observer, as_time(at)))

    # -- event generation ---------------------------------------------------

    def _ensure_timelines(self, u: NodeId):
        if u in self._steady:
            return
        p = self.g.period
        h = 3
        while True:
            horizon = h * p
            fronts, contribs, deepest = _direct_arrival_fronts(self.g, u, horizon)
            stable = int((deepest * self.g.latency) // p) + 1
            if horizon >= (stable + 2) * p:
                break
            h = stable + 2
            if h > 60:
                raise TClockError(f"level timeline for source {u!r} failed to stabilize")
        self._steady[u] = stable * p
        for v in self.g.nodes:
            if v == u:
                continue
            self._timelines[(u, v)] = _level_timeline(self.g, v, fronts, contribs, horizon)

    def steady_start(self, u: NodeId) -> Time:
        """Time from which all level timelines for source u repeat each period."""
        self._ensure_timelines(u)
        return self._steady[u]

    def level_at(self, u: NodeId, v: NodeId, t):
        """Instantaneous (level, proxy) of v relative to source u at time t."""
        self._ensure_timelines(u)
        return _timeline_value(self._timelines[(u, v)], self.g.period,
                               self._steady[u], t)

    def _level_events(self, u, v, until):
        """(time, level, proxy, at_instant) deliveries in (0, until)."""
        p = self.g.period
        s = self._steady[u]
        changes = self._timelines[(u, v)]
        evs = [(c.time, c.level, c.proxy, c.at_instant)
               for c in changes[1:] if c.time < s + p]
        tile = [c for c in changes if s <= c.time < s + p]
        pre_end = next(((c.level, c.proxy) for c in reversed(changes) if c.time < s + p),
                       (changes[0].level, changes[0].proxy))
        val_at_s = _timeline_value(changes, p, s, s)
        j = 1
        while True:
            shift = j * p
            added = False
            for c in tile:
                if c.time + shift < until:
                    evs.append((c.time + shift, c.level, c.proxy, c.at_instant))
                    added = True
            boundary = s + shift
            if (pre_end != val_at_s
                    and not any(c.time == s and c.at_instant for c in tile)
                    and boundary < until):
                evs.append((boundary, val_at_s[0], val_at_s[1], True))
                added = True
            if not added and s + shift >= until:
                break
            j += 1
        evs = [e for e in evs if 0 < e[0] < until]
        evs.sort(key=lambda e: (e[0], 0 if e[3] else 1))
        return evs

    def _date_events(self, u, v, until, table):
        """(time, date, proxy) dateImproved deliveries in [0, until)."""
        p = self.g.period
        cands: Dict[Time, Time] = {}
        for i, seg in enumerate(table.entries):
            if seg.trend != SLOPE:
                continue
            a, b = table.span_of(i)
            arrive, date = a + seg.value, b
            # the value may exceed the period, putting the first in-history
            # arrival one repeat earlier than the segment's own dates
            j = -1 if date >= p and arrive >= p else 0
            while arrive + j * p < until:
                t = arrive + j * p
                d = date + j * p
                if t not in cands or d > cands[t]:
                    cands[t] = d
                j += 1
        out = []
        best = None
        for t in sorted(cands):
            d = cands[t]
            lv, _ = self.level_at(u, v, t)
            if lv is not INF and d <= t - lv * self.g.latency:
                continue
            if best is not None and d <= best:
                continue
            best = d
            j = foremost_journey(self.g, u, v, d)
            proxy = j.hops[-1][0][0]
            out.append((t, d, proxy))
        return out

    def prepare(self, until):
        until = as_time(until)
        lo = self._prepared_until
        if until <= lo:
            self._flush_registrations()
            return
        self._prepared_until = until
        self._flush_registrations()
        for u in self.sources:
            self._ensure_timelines(u)
            tables = distance_functions(self.g, u)
            for v in self.g.nodes:
                if v == u:
                    continue
                for t, lv, px, _ in self._level_events(u, v, until):
                    if t < lo:
                        continue
                    self.sim.schedule_tclock(
                        t, self._make_level(v, u, lv, px),
                        ("tclock-levelChanged", v, u, lv, px))
                if v in tables:
                    for t, d, px in self._date_events(u, v, until, tables[v]):
                        if t < lo:
                            continue
                        self.sim.schedule_tclock(
                            t, self._make_date(v, u, d, px),
                            ("tclock-dateImproved", v, u, d, px))

    def _flush_registrations(self):
        for node, observer, at in self._registrations:
            if at < self.sim.time:
                raise TClockError(f"registration for {node!r} lies in the past")
            self.sim.schedule_tclock(at, self._make_register(node, observer, at),
                                     ("tclock-register", node))
        self._registrations = []

    # callback factories (bind loop variables by value)

    def _make_register(self, node, observer, at):
        def cb():
            self._observers[node] = observer
            for u in self.sources:
                if u == node:
                    continue
                lv, px = self.level_at(u, node, at)
                if lv is not INF:
                    observer.on_level_changed(u, lv, px, snapshot=True)
        return cb

    def _make_level(self, v, u, lv, px):
        def cb():
            obs = self._observers.get(v)
            if obs is not None:
                obs.on_level_changed(u, lv, px, snapshot=False)
        return cb

    def _make_date(self, v, u, d, px):
        def cb():
            obs = self._observers.get(v)
            if obs is not None:
                obs.on_date_improved(u, d, px)
        return cb
