"""Dynamic personalized PageRank over an incrementally maintained walk index."""
from .dyngraph import (
    DynGraph,
    EventKind,
    GraphPool,
    WorkloadEvent,
    gen_workload,
    load_edge_list,
    read_edge_list,
    read_workload,
    split_edges,
    write_workload,
)
from .errors import (
    DuplicateEdge,
    IndexUnderflow,
    MissingEdge,
    ParseError,
    PoolExhausted,
    RefusesLargeGraph,
)
from .fpush import PushParams, PushResult, forward_push
from .query import ApproxParams, SsppResult, TopKResult, query_sspr, query_topk
from .rng import Rng, ScriptedRng
from .walk_store import (
    CrossingRecord,
    UpdateStats,
    Walk,
    WalkIndex,
    audit,
    build_index,
    index_from_paths,
    load_snapshot,
    save_snapshot,
)

__all__ = [
    "ApproxParams",
    "CrossingRecord",
    "DuplicateEdge",
    "DynGraph",
    "EventKind",
    "GraphPool",
    "IndexUnderflow",
    "MissingEdge",
    "ParseError",
    "PoolExhausted",
    "PushParams",
    "PushResult",
    "RefusesLargeGraph",
    "Rng",
    "ScriptedRng",
    "SsppResult",
    "TopKResult",
    "UpdateStats",
    "Walk",
    "WalkIndex",
    "WorkloadEvent",
    "audit",
    "build_index",
    "forward_push",
    "gen_workload",
    "index_from_paths",
    "load_edge_list",
    "load_snapshot",
    "query_sspr",
    "query_topk",
    "read_edge_list",
    "read_workload",
    "save_snapshot",
    "split_edges",
    "write_workload",
]
