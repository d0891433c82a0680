"""Fastest-broadcast-tree construction in periodic time-varying graphs.

Exact-rational model of periodically-varying graphs, centralized journey
oracles, a deterministic event simulator, passive structure discovery
(levels and improved emission dates), distance-table learning, and the
distributed broadcast protocols built on top of them.
"""

from .graph import (
    Edge,
    GraphError,
    InvalidJourneyError,
    Journey,
    NodeId,
    Time,
    TimeVaryingGraph,
    as_time,
    edge_key,
    is_direct_journey,
    journey_metrics,
    normalize_date,
    validate_journey,
)
from .segments import (
    FLAT,
    SLOPE,
    Segment,
    SegmentTable,
    SegmentTableError,
    aggregate,
    aggregate_all,
    align_tables,
    decross,
    min_windows,
    zero_table,
)
from .oracle import (
    UnreachableError,
    distance_function,
    distance_functions,
    earliest_arrival,
    eccentricity_function,
    fastest_journey,
    foremost_journey,
    level,
    shortest_journey,
    temporal_view,
)
from .sim import (
    Context,
    NodeProcess,
    SimulationError,
    Simulator,
    format_time,
)
from .tclocks import INF, TClockError, TClockLayer
from .learner import DistanceLearner, LearnerError
from .broadcast import (
    BroadcastError,
    BroadcastTree,
    aggregate_to_emitter,
    build_convergecast_tree,
    fastest_broadcast,
    foremost_broadcast,
)
from .scenario import (
    Scenario,
    ScenarioError,
    parse_scenario,
    serialize_scenario,
)

__version__ = "1.0.0"
