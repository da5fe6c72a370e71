"""Shared graphs and index states for the test suite."""
from __future__ import annotations

from dynppr.dyngraph import DynGraph
from dynppr.rng import Rng, ScriptedRng
from dynppr.walk_store import WalkIndex, index_from_paths

# the four-node example graph, v1..v4 as 0..3
V1, V2, V3, V4 = 0, 1, 2, 3
EXAMPLE_EDGES = [(V1, V2), (V2, V4), (V3, V1), (V3, V2), (V4, V3)]
EXAMPLE_RW = 1.5  # r_max * omega giving 2, 2, 3, 2 walks

# initial index, keyed by walk id
INITIAL_WALKS = {
    1: [V1, V2, V4],
    2: [V1, V2],
    3: [V2, V4],
    4: [V2, V4, V3, V1],
    5: [V3, V1, V2],
    6: [V3, V2, V4],
    7: [V3, V1],
    8: [V4, V3, V1],
    9: [V4, V3],
}
# after inserting (v4, v1)
INSERTED_WALKS = dict(INITIAL_WALKS)
INSERTED_WALKS.update({4: [V2, V4, V1, V2], 8: [V4, V1, V2], 10: [V4, V3]})
# after deleting (v3, v2): walk 7 dropped, walk 6 rerouted
DELETED_WALKS = {k: v for k, v in INSERTED_WALKS.items() if k != 7}
DELETED_WALKS[6] = [V3, V1, V2]

# crossing records per node, as (id, step)
INITIAL_NODE_RECORDS = {
    V1: {(1, 0), (2, 0), (5, 1)},
    V2: {(1, 1), (3, 0), (4, 0), (6, 1)},
    V3: {(4, 2), (5, 0), (6, 0), (7, 0), (8, 1)},
    V4: {(4, 1), (8, 0), (9, 0)},
}
INSERTED_NODE_RECORDS = {
    V1: {(1, 0), (2, 0), (4, 2), (5, 1), (8, 1)},
    V2: {(1, 1), (3, 0), (4, 0), (6, 1)},
    V3: {(5, 0), (6, 0), (7, 0)},
    V4: {(4, 1), (8, 0), (9, 0), (10, 0)},
}
INSERTED_EDGE_RECORDS = {
    (V1, V2): {(1, 0), (2, 0), (4, 2), (5, 1), (8, 1)},
    (V2, V4): {(1, 1), (3, 0), (4, 0), (6, 1)},
    (V3, V1): {(5, 0), (7, 0)},
    (V3, V2): {(6, 0)},
    (V4, V1): {(4, 1), (8, 0)},
    (V4, V3): {(9, 0), (10, 0)},
}
DELETED_EDGE_RECORDS = {
    (V1, V2): {(1, 0), (2, 0), (4, 2), (5, 1), (6, 1), (8, 1)},
    (V2, V4): {(1, 1), (3, 0), (4, 0)},
    (V3, V1): {(5, 0), (6, 0)},
    (V4, V1): {(4, 1), (8, 0)},
    (V4, V3): {(9, 0), (10, 0)},
}


GO, STOP = ("random", 0.9), ("random", 0.1)


def below(i: int) -> tuple[str, int]:
    return ("below", i)


def example_g0() -> DynGraph:
    return DynGraph(4, EXAMPLE_EDGES)


def example_index(alpha: float = 0.2) -> WalkIndex:
    return index_from_paths(example_g0(), alpha, EXAMPLE_RW, INITIAL_WALKS)


def insert_script() -> ScriptedRng:
    """Draws that turn the initial index into the post-insertion one."""
    return ScriptedRng([
        ("binomial", 2),
        # C(v4, v3) holds [{4,1}, {8,0}, {9,0}]; pick the first two
        below(0), below(0),
        below(0), below(1),
        below(0),  # walk 4 continues from v1 to its only neighbour v2
        below(0),  # walk 8 likewise
        GO, below(0), STOP,  # new walk 10: v4 -> v3
    ])


def delete_script() -> ScriptedRng:
    """Drop walk 7 from H(v3), then reroute walk 6 through v1."""
    return ScriptedRng([below(2), below(0), below(0)])


def edge_record_sets(index: WalkIndex) -> dict[tuple[int, int], set[tuple[int, int]]]:
    return {
        (u, v): {tuple(r) for r in index.records_on_edge(u, v)}
        for u, v in index.graph.edges()
        if index.records_on_edge(u, v)
    }


def random_graph(n: int, m: int, rng: Rng | int, *, self_loops: bool = False) -> DynGraph:
    """Uniform simple digraph with exactly ``m`` edges."""
    if isinstance(rng, int):
        rng = Rng(rng)
    g = DynGraph(n)
    while g.m < m:
        u, v = rng.randbelow(n), rng.randbelow(n)
        if (u != v or self_loops) and not g.has_edge(u, v):
            g.insert_edge(u, v)
    return g


def sparse_graph(n: int, m: int, rng: Rng | int) -> DynGraph:
    """Random digraph that keeps some dangling nodes (roughly a fifth)."""
    if isinstance(rng, int):
        rng = Rng(rng)
    sinks = set(range(0, n, 5))
    g = DynGraph(n)
    while g.m < m:
        u, v = rng.randbelow(n), rng.randbelow(n)
        if u != v and u not in sinks and not g.has_edge(u, v):
            g.insert_edge(u, v)
    return g


def node_records(index: WalkIndex) -> dict[int, set[tuple[int, int]]]:
    out: dict[int, set[tuple[int, int]]] = {}
    for u in range(index.graph.n):
        recs = set()
        for v in index.graph.out_neighbors(u):
            recs |= {tuple(r) for r in index.records_on_edge(u, v)}
        recs |= {tuple(r) for r in index.records_at_dangling(u)}
        if recs:
            out[u] = recs
    return out


def all_paths(index: WalkIndex) -> dict[int, list[int]]:
    return {wid: list(p) for wid, p in index.paths.items()}
