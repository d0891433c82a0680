"""Structure-discovery event layer, validated against brute-force recomputation."""

import random
from fractions import Fraction

from tvgcast.graph import edge_key
from tvgcast.oracle import earliest_arrival, level
from tvgcast.sim import Simulator
from tvgcast.tclocks import INF, TClockLayer

from conftest import random_periodic_graph, temporally_connected


class Recording:
    """Observer keeping every notification with its delivery time."""

    def __init__(self, sim):
        self.sim = sim
        self.levels = []   # (time, level, proxy)
        self.dates = []    # (time, date, proxy)
        self.snapshot = None

    def on_level_changed(self, src, lv, proxy, snapshot=False):
        if snapshot:
            self.snapshot = (self.sim.time, lv, proxy)
        else:
            self.levels.append((self.sim.time, lv, proxy))

    def on_date_improved(self, src, date, proxy):
        self.dates.append((self.sim.time, date, proxy))


def observe(g, source, node, span=2):
    sim = Simulator(g, record_trace=False)
    layer = TClockLayer(sim, sources=[source])
    start = layer.steady_start(source)
    rec = Recording(sim)
    layer.register(node, rec, at=start)
    sim.run(start + span * g.period)
    return start, rec


def test_reference_event_streams(triangle):
    start, rec = observe(triangle, "a", "c")
    assert start == 100
    assert [(t, lv) for t, lv, _ in rec.levels] == [
        (111, 2), (121, 1), (160, INF), (211, 2), (221, 1), (260, INF)]
    assert rec.dates == []
    # proxies name the last relay of the achieving direct journey
    assert [px for _, lv, px in rec.levels if lv == 1] == ["a", "a"]
    assert [px for _, lv, px in rec.levels if lv == 2] == ["b", "b"]

    start, rec = observe(triangle, "a", "b")
    assert [(t, lv) for t, lv, _ in rec.levels] == [
        (101, 1), (130, 2), (140, INF), (201, 1), (230, 2), (240, INF)]
    assert [(t, d) for t, d, _ in rec.dates] == [(171, 159), (271, 259)]


def test_snapshot_primes_current_level(triangle):
    sim = Simulator(triangle, record_trace=False)
    layer = TClockLayer(sim, sources=["a"])
    rec = Recording(sim)
    layer.register("c", rec, at=125)
    sim.run(200)
    assert rec.snapshot == (125, 1, "a")  # inside the single-hop continuum


def test_streams_are_periodic_from_steady_start():
    rng = random.Random(21)
    done = 0
    while done < 10:
        g = random_periodic_graph(rng)
        if not temporally_connected(g):
            continue
        done += 1
        u, v = g.nodes[0], g.nodes[-1]
        start, rec = observe(g, u, v, span=3)
        p = g.period

        def in_window(events, k):
            lo, hi = start + k * p, start + (k + 1) * p
            return [(t - k * p,) + e[1:] for e in events for t in [e[0]] if lo <= t < hi]

        for events in (rec.levels, rec.dates):
            shift = lambda e, k: (e[0],) + tuple(
                x - k * p if isinstance(x, Fraction) and events is rec.dates else x
                for x in e[1:])
            w0 = in_window(events, 0)
            for k in (1, 2):
                wk = in_window(events, k)
                if events is rec.dates:
                    wk = [(t, d - k * p, px) for t, d, px in wk]
                    w0n = [(t, d, px) for t, d, px in w0]
                    assert wk == w0n
                else:
                    assert wk == w0


def test_levels_match_brute_force_between_events():
    rng = random.Random(22)
    done = 0
    while done < 8:
        g = random_periodic_graph(rng)
        if not temporally_connected(g):
            continue
        done += 1
        u = g.nodes[0]
        for v in g.nodes[1:]:
            start, rec = observe(g, u, v)
            times = [t for t, _, _ in rec.levels]
            # no snapshot notification means no direct journey arrives then
            current = rec.snapshot[1] if rec.snapshot is not None else INF
            marks = [start] + times + [start + 2 * g.period]
            idx = 0
            for a, b in zip(marks[:-1], marks[1:]):
                if a < b:
                    mid = (a + b) / 2
                    want = level(g, u, v, mid)
                    got = None if current is INF else current
                    assert got == want, (g, v, mid, got, want)
                if idx < len(rec.levels):
                    current = rec.levels[idx][1]
                    idx += 1


def test_level_proxies_identify_a_valid_last_relay():
    rng = random.Random(23)
    done = 0
    while done < 6:
        g = random_periodic_graph(rng)
        if not temporally_connected(g):
            continue
        done += 1
        u = g.nodes[0]
        z = g.latency
        for v in g.nodes[1:]:
            start, rec = observe(g, u, v)
            times = [t for t, _, _ in rec.levels]
            for i, (t, lv, px) in enumerate(rec.levels):
                if lv is INF:
                    continue
                # the announced state holds just after the notification
                nxt = times[i + 1] if i + 1 < len(times) else t + g.period
                tau = t + min(Fraction(1, 64), (nxt - t) / 2) if nxt > t else None
                if tau is None:
                    continue  # superseded within the same instant
                assert px in g.neighbors(v)
                assert g.is_present_throughout(edge_key(px, v), tau - z, tau)
                if lv == 1:
                    assert px == u
                else:
                    assert level(g, u, px, tau - z) == lv - 1, (g, v, t, lv, px)


def test_date_improvements_are_increasing_and_arrive_exactly():
    rng = random.Random(24)
    done = 0
    while done < 8:
        g = random_periodic_graph(rng)
        if not temporally_connected(g):
            continue
        done += 1
        u = g.nodes[0]
        for v in g.nodes[1:]:
            start, rec = observe(g, u, v)
            dates = [d for _, d, _ in rec.dates]
            assert dates == sorted(set(dates))
            for t, d, px in rec.dates:
                # the improved date is the latest emission arriving right now
                assert earliest_arrival(g, u, v, d) == t, (g, v, t, d)
                assert px in g.neighbors(v)
