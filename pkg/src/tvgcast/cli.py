"""Command-line surface: journey oracle queries, distributed learning runs,
and the end-to-end fastest-broadcast pipeline.

Exit codes: 0 success, 2 scenario/argument error, 3 unreachable or
connectivity failure, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .broadcast import BroadcastError, aggregate_to_emitter, fastest_broadcast
from .graph import GraphError, as_time
from .learner import DistanceLearner, LearnerError
from .oracle import UnreachableError, distance_function, earliest_arrival
from .scenario import ScenarioError, parse_scenario
from .segments import SegmentTable
from .sim import SimulationError, Simulator, format_time
from .tclocks import TClockError, TClockLayer

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNREACHABLE = 3
EXIT_INTERNAL = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _CliError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc
    try:
        return parse_scenario(text)
    except ScenarioError as exc:
        raise _CliError(EXIT_PARSE, f"{path}: {exc}") from exc


def _parse_time_arg(tok: str, what: str):
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise _CliError(EXIT_PARSE, f"invalid {what}: {tok!r}") from None


def _check_node(scn, name, what):
    if name not in scn.graph.nodes:
        raise _CliError(EXIT_PARSE, f"{what} {name!r} is not a node of the scenario")


def _table_csv(tbl: SegmentTable, out):
    print("date,value,trend", file=out)
    for date, value, trend in tbl.as_rows():
        print(f"{format_time(date)},{format_time(value)},{trend}", file=out)


# -- commands -----------------------------------------------------------------

def _cmd_oracle_distance(args, out):
    scn = _load(args.graph)
    g = scn.graph
    _check_node(scn, getattr(args, "from"), "--from")
    _check_node(scn, args.to, "--to")
    u, v = getattr(args, "from"), args.to
    if args.at is not None:
        t = _parse_time_arg(args.at, "--at date")
        arrival = earliest_arrival(g, u, v, t)
        if arrival is None:
            raise _CliError(EXIT_UNREACHABLE, f"{v!r} unreachable from {u!r} at {args.at}")
        print(f"{format_time(arrival - t)} {format_time(arrival)}", file=out)
    else:
        try:
            tbl = distance_function(g, u, v)
        except UnreachableError as exc:
            raise _CliError(EXIT_UNREACHABLE, str(exc)) from exc
        _table_csv(tbl, out)


def _run_learners(scn, emitter, targets):
    """Run one simulation with learners at `targets`; returns {node: learner}."""
    g = scn.graph
    sim = Simulator(g, clock_offsets=scn.clock_offsets, record_trace=False)
    layer = TClockLayer(sim, sources=[emitter])
    default_at = layer.steady_start(emitter)
    learners = {}
    latest = default_at
    for v in targets:
        at = scn.registration_times.get(v, default_at)
        learner = DistanceLearner(v, emitter, g.period, g.latency,
                                  now_fn=lambda: sim.time)
        layer.register(v, learner, at=at)
        sim.schedule_tclock(at + g.period,
                            learner.conclude_constant, ("tclock-quiescent", v))
        learners[v] = learner
        latest = max(latest, at)
    until = scn.until_time if scn.until_time is not None else latest + 3 * g.period
    sim.run(until)
    return learners


def _cmd_learn(args, out):
    scn = _load(args.graph)
    g = scn.graph
    _check_node(scn, args.emitter, "--emitter")
    if args.node is not None:
        _check_node(scn, args.node, "--node")
        targets = [args.node]
    else:
        targets = [v for v in g.nodes if v != args.emitter]
    if not targets:
        return
    if args.register_at is not None:
        at = _parse_time_arg(args.register_at, "--register-at date")
        scn = type(scn)(g, scn.clock_offsets, scn.emitter,
                        {v: at for v in targets}, scn.until_time)
    try:
        learners = _run_learners(scn, args.emitter, targets)
    except (UnreachableError, BroadcastError) as exc:
        raise _CliError(EXIT_UNREACHABLE, str(exc)) from exc
    first = True
    for v in targets:
        learner = learners[v]
        if not learner.terminated:
            raise _CliError(EXIT_UNREACHABLE,
                            f"learner at {v!r} did not terminate within the horizon")
        if not first:
            print(file=out)
        first = False
        print(f"node {v}", file=out)
        _table_csv(learner.finalize(), out)
        if args.trace:
            for line in learner.trace:
                print(line, file=out)


def _cmd_fastest_broadcast(args, out):
    scn = _load(args.graph)
    g = scn.graph
    _check_node(scn, args.emitter, "--emitter")
    sim = Simulator(g, clock_offsets=scn.clock_offsets, record_trace=False)
    try:
        chosen, tree, duration = fastest_broadcast(sim, args.emitter)
    except (UnreachableError, BroadcastError, LearnerError) as exc:
        raise _CliError(EXIT_UNREACHABLE, str(exc)) from exc
    ecc = aggregate_to_emitter(Simulator(g, record_trace=False), args.emitter)
    _table_csv(ecc, out)
    print(f"{format_time(chosen)} {format_time(duration)}", file=out)
    serialized = tree.serialize()
    if serialized:
        print(serialized, file=out)


# -- entry point ----------------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(prog="tvgcast",
                                description="Broadcast scheduling in periodic time-varying graphs")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("oracle-distance", help="temporal distance queries (full knowledge)")
    d.add_argument("--graph", required=True, help="scenario file")
    d.add_argument("--from", required=True, help="source node")
    d.add_argument("--to", required=True, help="destination node")
    grp = d.add_mutually_exclusive_group(required=True)
    grp.add_argument("--at", help="departure date: print 'distance arrival'")
    grp.add_argument("--function", action="store_true",
                     help="print the one-period distance table as CSV")
    d.set_defaults(fn=_cmd_oracle_distance)

    l = sub.add_parser("learn", help="run distributed distance learners")
    l.add_argument("--graph", required=True, help="scenario file")
    l.add_argument("--emitter", required=True, help="emitter node")
    l.add_argument("--node", help="learn only at this node (default: all others)")
    l.add_argument("--register-at", help="registration date for the learners")
    l.add_argument("--trace", action="store_true", help="also print the action trace")
    l.set_defaults(fn=_cmd_learn)

    f = sub.add_parser("fastest-broadcast", help="full pipeline: learn, aggregate, broadcast")
    f.add_argument("--graph", required=True, help="scenario file")
    f.add_argument("--emitter", required=True, help="emitter node")
    f.set_defaults(fn=_cmd_fastest_broadcast)
    return p


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    try:
        args.fn(args, out)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ScenarioError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnreachableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except (SimulationError, TClockError, LearnerError, BroadcastError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
