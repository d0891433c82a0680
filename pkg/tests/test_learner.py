"""Distance-table learning from level and date notifications."""

import random
from fractions import Fraction

import pytest

from tvgcast.learner import DistanceLearner, LearnerError
from tvgcast.oracle import distance_functions
from tvgcast.segments import FLAT, SLOPE
from tvgcast.sim import Simulator
from tvgcast.tclocks import INF, TClockLayer

from conftest import random_periodic_graph, temporally_connected


def learn(g, emitter, node, at=None, horizon_periods=3):
    sim = Simulator(g, record_trace=False)
    layer = TClockLayer(sim, sources=[emitter])
    if at is None:
        at = layer.steady_start(emitter)
    learner = DistanceLearner(node, emitter, g.period, g.latency,
                              now_fn=lambda: sim.time)
    layer.register(node, learner, at=at)
    sim.run(at + horizon_periods * g.period)
    return learner


def test_reference_table_node_c(triangle):
    learner = learn(triangle, "a", "c")
    assert learner.terminated
    assert learner.finalize().as_rows() == [
        (9, 2, FLAT), (19, 2, SLOPE), (20, 1, FLAT), (59, 52, SLOPE)]


def test_reference_table_node_b(triangle):
    learner = learn(triangle, "a", "b")
    assert learner.finalize().as_rows() == [
        (0, 1, FLAT), (29, 2, FLAT), (38, 33, SLOPE), (59, 42, SLOPE)]


def test_reference_action_trace(triangle):
    learner = learn(triangle, "a", "c", at=60)
    actions = [line.split(" | ")[2] for line in learner.trace]
    expected = [
        "startD <- 60",
        "pendingED <- 59",
        "add(59,52,slope)",
        "add(109,2,flat)",
        "add(119,2,slope)",
        "add(120,1,flat)",
        "terminate",
    ]
    positions = []
    i = 0
    for a in actions:
        if i < len(expected) and a == expected[i]:
            positions.append(a)
            i += 1
    assert positions == expected, learner.trace
    # the decisive steps happen at the documented instants
    stamped = [(line.split(" | ")[0], line.split(" | ")[2]) for line in learner.trace]
    assert ("111", "add(59,52,slope)") in stamped
    assert ("121", "add(109,2,flat)") in stamped
    assert ("121", "add(119,2,slope)") in stamped
    assert ("160", "add(120,1,flat)") in stamped
    assert ("160", "terminate") in stamped


def test_terminates_exactly_one_period_after_first_update(triangle):
    learner = learn(triangle, "a", "c", at=35)
    assert learner.terminated
    assert learner.start_d == 60
    last = Fraction(learner.trace[-1].split(" | ")[0])
    assert last == learner.start_d + triangle.period


def test_registration_anywhere_in_first_continuum_gives_same_table(triangle):
    tables = []
    for at in (21, 35, 50, 60):
        learner = learn(triangle, "a", "c", at=at)
        tables.append(learner.finalize().as_rows())
    assert all(t == tables[0] for t in tables)


def test_tables_match_oracle_on_random_graphs():
    rng = random.Random(31)
    done = 0
    while done < 12:
        g = random_periodic_graph(rng)
        if not temporally_connected(g):
            continue
        done += 1
        u = g.nodes[0]
        oracle = distance_functions(g, u)
        for v in g.nodes[1:]:
            learner = learn(g, u, v)
            assert learner.terminated, (g, v)
            assert learner.finalize().as_rows() == oracle[v].as_rows(), (g, v)


def test_quiescent_stream_concludes_constant_table():
    from tvgcast.graph import TimeVaryingGraph
    g = TimeVaryingGraph.build(["a", "b"], {("a", "b"): [(0, 10)]}, 10, 1)
    sim = Simulator(g, record_trace=False)
    layer = TClockLayer(sim, sources=["a"])
    learner = DistanceLearner("b", "a", 10, 1, now_fn=lambda: sim.time)
    layer.register("b", learner, at=layer.steady_start("a"))
    sim.run(100)
    assert not learner.terminated
    assert learner.conclude_constant()
    assert learner.finalize().as_rows() == [(0, 1, FLAT)]


def test_errors():
    with pytest.raises(LearnerError):
        DistanceLearner("a", "a", 10, 1, now_fn=lambda: 0)
    learner = DistanceLearner("b", "a", 10, 1, now_fn=lambda: 0)
    with pytest.raises(LearnerError):
        learner.finalize()
