"""Static analyzer for PV-style concurrent programs.

Computes spare capacities of the associated state space, detects deadlocks,
doomed regions and critical states, bounds the connectivity of the space of
directed executions, and validates the bounds with a brute-force directed-path
oracle.
"""

from .analysis import (
    AnalysisReport,
    ChainBound,
    CrashReport,
    CrashScenario,
    CriticalInfo,
    CriticalRegion,
    DeadlockInfo,
    EliminationResult,
    GlobalSpare,
    INFINITE,
    analyze,
    analyze_crash,
    component_upper_bound,
    critical_region,
    doomed_box,
    eliminate_deadlocks,
    find_critical_vertices,
    find_deadlocks,
    global_spare_capacity,
    higher_order_critical_regions,
    make_crash_scenario,
    spare_capacity_at,
)
from .links import (
    ConnectivityClass,
    JoinFactor,
    JoinOfSkeleta,
    LinkComplex,
    complex_components,
    descriptor_connectivity,
    future_link_complex,
    future_link_descriptor,
    predicted_components,
)
from .oracle import (
    PathClassSet,
    TamePath,
    check_membership_by_boxes,
    count_path_components,
    enumerate_tame_paths,
)
from .pv_lang import (
    Action,
    Program,
    ResourceDecl,
    Thread,
    Violation,
    generate_threshold_program,
    parse_program,
    serialize_program,
    validate_program,
)
from .semantics import (
    Box,
    ConsumptionProfile,
    StateSpace,
    VertexClass,
    build_consumption_profiles,
    classify_vertex,
    cube_allowed,
    predecessor_vertex,
    reachable_to_target,
    successor_vertex,
    vertex_calls,
    vertex_consumption,
)

__version__ = "0.1.0"
