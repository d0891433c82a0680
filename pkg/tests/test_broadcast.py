"""Distributed protocols: flooding, tree construction, aggregation, fastest broadcast."""

import random
from fractions import Fraction

import pytest

from tvgcast.broadcast import (
    BroadcastError,
    aggregate_to_emitter,
    build_convergecast_tree,
    fastest_broadcast,
    foremost_broadcast,
)
from tvgcast.graph import TimeVaryingGraph
from tvgcast.oracle import (
    UnreachableError,
    earliest_arrival,
    eccentricity_function,
)
from tvgcast.segments import min_windows
from tvgcast.sim import Simulator

from conftest import random_periodic_graph, temporally_connected


def connected_graphs(seed, count):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g = random_periodic_graph(rng)
        if temporally_connected(g):
            out.append(g)
    return out


def test_foremost_receptions_are_earliest_arrivals(triangle):
    sim = Simulator(triangle, record_trace=False)
    tree = foremost_broadcast(sim, "a", 0)
    assert tree.reception == {"a": 0, "b": 1, "c": 11}
    assert tree.parent == {"b": "a", "c": "b"}


def test_foremost_from_rational_start(triangle):
    sim = Simulator(triangle, record_trace=False)
    t0 = Fraction(65, 2)
    tree = foremost_broadcast(sim, "a", t0)
    for v in triangle.nodes:
        assert tree.reception[v] == earliest_arrival(triangle, "a", v, t0)


def test_tree_parents_are_first_senders_with_min_tie_break():
    g = TimeVaryingGraph.build(
        ["a", "b", "c", "d"],
        {("a", "b"): [(0, 10)], ("a", "c"): [(0, 10)], ("b", "d"): [(1, 10)],
         ("c", "d"): [(1, 10)]},
        10, 1)
    sim = Simulator(g, record_trace=False)
    tree = build_convergecast_tree(sim, "a", 0)
    # b and c deliver to d at the same instant; the smaller id wins
    assert tree.parent["d"] == "b"
    assert tree.reception["d"] == 2


def test_convergecast_tree_on_random_graphs():
    for g in connected_graphs(41, 10):
        root = g.nodes[0]
        sim = Simulator(g, record_trace=False)
        tree = build_convergecast_tree(sim, root, 0)
        assert set(tree.parent) == set(g.nodes) - {root}
        for child, parent in tree.parent.items():
            assert g.has_edge(child, parent)
            # a child hears of the broadcast no earlier than its parent
            assert tree.reception[child] >= tree.reception[parent] + g.latency
        assert tree.reception[root] == 0


def test_aggregated_table_matches_oracle_eccentricity():
    for g in connected_graphs(42, 10):
        u = g.nodes[0]
        sim = Simulator(g, record_trace=False)
        ecc = aggregate_to_emitter(sim, u)
        assert ecc.as_rows() == eccentricity_function(g, u).as_rows(), g


def test_fastest_broadcast_reference(triangle):
    sim = Simulator(triangle, record_trace=False)
    chosen, tree, duration = fastest_broadcast(sim, "a")
    assert chosen == 20
    assert duration == 1
    assert tree.parent == {"b": "a", "c": "a"}


def test_fastest_broadcast_achieves_oracle_minimum():
    for g in connected_graphs(43, 6):
        u = g.nodes[0]
        sim = Simulator(g, record_trace=False)
        chosen, tree, duration = fastest_broadcast(sim, u)
        m, wins = min_windows(eccentricity_function(g, u))
        assert duration == m, (g, chosen, duration, m)
        assert 0 <= chosen < g.period


def test_unreachable_node_raises():
    g = TimeVaryingGraph.build(
        ["a", "b", "d"], {("a", "b"): [(0, 10)]}, 10, 1)
    with pytest.raises(UnreachableError):
        foremost_broadcast(Simulator(g, record_trace=False), "a", 0)
    with pytest.raises(UnreachableError):
        build_convergecast_tree(Simulator(g, record_trace=False), "a", 0)


def test_edges_too_short_for_latency_are_ignored():
    g = TimeVaryingGraph.build(
        ["a", "b", "c"],
        {("a", "b"): [(0, 10)], ("b", "c"): [(3, 6)],
         ("a", "c"): [(0, Fraction(1, 2)), (5, Fraction(11, 2))]},
        10, 1)
    sim = Simulator(g, record_trace=False)
    tree = foremost_broadcast(sim, "a", 0)
    # a-c never stays up a full latency; c must be reached through b
    assert tree.parent["c"] == "b"
    assert tree.reception["c"] == earliest_arrival(g, "a", "c", 0) == 4


def test_clock_offsets_do_not_change_reception_dates(triangle):
    base = foremost_broadcast(Simulator(triangle, record_trace=False), "a", 0)
    skewed = foremost_broadcast(
        Simulator(triangle, record_trace=False,
                  clock_offsets={"b": Fraction(7), "c": Fraction(1, 3)}),
        "a", 0)
    assert base.reception == skewed.reception
    assert base.parent == skewed.parent


def test_tree_serialization(triangle):
    sim = Simulator(triangle, record_trace=False)
    tree = foremost_broadcast(sim, "a", 0)
    assert tree.serialize() == "b a 1\nc b 11"
