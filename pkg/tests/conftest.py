"""Shared fixtures: reference graphs and the randomized periodic-graph corpus."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from tvgcast.graph import TimeVaryingGraph
from tvgcast.oracle import _foremost_labels


@pytest.fixture(scope="session")
def triangle():
    """Three nodes, period 100, unit latency; the main worked reference."""
    return TimeVaryingGraph.build(
        ["a", "b", "c"],
        {("a", "b"): [(0, 30)],
         ("a", "c"): [(20, 60)],
         ("b", "c"): [(10, 40), (70, 80)]},
        100, 1)


@pytest.fixture(scope="session")
def switch():
    """Two alternating edges around a relay, latency 1/10, period 10."""
    return TimeVaryingGraph.build(
        ["a", "b", "c"],
        {("a", "b"): [(0, 4)],
         ("b", "c"): [(1, 3), (5, 6)]},
        10, Fraction(1, 10))


def random_periodic_graph(rng: random.Random) -> TimeVaryingGraph:
    """n in 3..6, up to 3 integer-endpoint intervals per edge, p in 10..50,
    latency 1 or 1/2."""
    n = rng.randint(3, 6)
    nodes = [chr(ord("a") + i) for i in range(n)]
    p = rng.randint(10, 50)
    z = rng.choice([Fraction(1), Fraction(1, 2)])
    sched = {}
    for u, v in itertools.combinations(nodes, 2):
        if rng.random() >= 0.6:
            continue
        k = rng.randint(1, 3)
        pts = sorted(rng.sample(range(0, p + 1), 2 * k))
        ivs = [(pts[2 * i], pts[2 * i + 1]) for i in range(k)
               if pts[2 * i] < pts[2 * i + 1]]
        if ivs:
            sched[(u, v)] = ivs
    return TimeVaryingGraph.build(nodes, sched, p, z)


def temporally_connected(g: TimeVaryingGraph) -> bool:
    """Every node reaches every other (period-independent of start date)."""
    return all(len(_foremost_labels(g, u, Fraction(0))) == len(g.nodes)
               for u in g.nodes)


@pytest.fixture(scope="session")
def corpus():
    """200 connected random periodic graphs; fixed seed, deterministic."""
    rng = random.Random(20260823)
    graphs = []
    while len(graphs) < 200:
        g = random_periodic_graph(rng)
        if temporally_connected(g):
            graphs.append(g)
    return graphs
