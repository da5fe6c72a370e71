from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynppr.dyngraph import DynGraph
from dynppr.oracle import ppr_matrix
from dynppr.rng import Rng, ScriptedRng
from dynppr.walk_store import (
    Walk,
    WalkIndex,
    audit,
    build_index,
    index_from_paths,
    load_snapshot,
    save_snapshot,
    walk_budget,
)

from .fixtures import (
    EXAMPLE_RW,
    GO,
    STOP,
    INITIAL_NODE_RECORDS,
    INITIAL_WALKS,
    INSERTED_EDGE_RECORDS,
    INSERTED_NODE_RECORDS,
    INSERTED_WALKS,
    DELETED_EDGE_RECORDS,
    DELETED_WALKS,
    V1,
    V2,
    V3,
    V4,
    all_paths,
    below,
    delete_script,
    edge_record_sets,
    example_g0,
    insert_script,
    node_records,
    random_graph,
    sparse_graph,
    example_index,
)

ALPHA = 0.2


# ---------------------------------------------------------------------------
# the worked example


def test_example_initial_state():
    idx = example_index()
    assert audit(idx.graph, idx) == []
    assert [len(idx.by_source[u]) for u in (V1, V2, V3, V4)] == [2, 2, 3, 2]
    assert node_records(idx) == INITIAL_NODE_RECORDS
    assert [idx.crossings(u) for u in (V1, V2, V3, V4)] == [3, 4, 5, 3]


def test_example_built_from_scripted_draws():
    # v3's neighbours are [v1, v2] in insertion order
    script = [
        GO, below(0), GO, below(0), STOP,  # v1 v2 v4
        GO, below(0), STOP,  # v1 v2
        GO, below(0), STOP,  # v2 v4
        GO, below(0), GO, below(0), GO, below(0), STOP,  # v2 v4 v3 v1
        GO, below(0), GO, below(0), STOP,  # v3 v1 v2
        GO, below(1), GO, below(0), STOP,  # v3 v2 v4
        GO, below(0), STOP,  # v3 v1
        GO, below(0), GO, below(0), STOP,  # v4 v3 v1
        GO, below(0), STOP,  # v4 v3
    ]
    rng = ScriptedRng(script)
    idx = build_index(example_g0(), ALPHA, EXAMPLE_RW, rng)
    assert rng.remaining() == 0
    assert all_paths(idx) == {wid - 1: p for wid, p in INITIAL_WALKS.items()}


def insert_v4_v1(idx: WalkIndex) -> tuple[ScriptedRng, object]:
    idx.graph.insert_edge(V4, V1)
    rng = insert_script()
    return rng, idx.update_insert(V4, V1, rng)


def test_insert_replay_matches_example():
    idx = example_index()
    rng, stats = insert_v4_v1(idx)
    assert rng.remaining() == 0
    assert rng.log[0] == ("binomial", (3, 0.5))
    assert (stats.touched, stats.added, stats.removed) == (2, 1, 0)
    assert all_paths(idx) == INSERTED_WALKS
    assert node_records(idx) == INSERTED_NODE_RECORDS
    assert edge_record_sets(idx) == INSERTED_EDGE_RECORDS
    assert idx.by_source[V4] == [8, 9, 10]
    assert sorted(idx.active_edges(V4)) == [V1, V3]
    assert audit(idx.graph, idx) == []


def test_delete_replay_matches_example():
    idx = example_index()
    insert_v4_v1(idx)
    idx.graph.delete_edge(V3, V2)
    rng = delete_script()
    stats = idx.update_delete(V3, V2, rng)
    assert rng.remaining() == 0
    assert (stats.touched, stats.removed) == (1, 1)
    assert all_paths(idx) == DELETED_WALKS
    assert idx.by_source[V3] == [5, 6]
    assert edge_record_sets(idx) == DELETED_EDGE_RECORDS
    assert idx.records_on_edge(V3, V2) == []
    assert audit(idx.graph, idx) == []


def test_rw6_restart_on_g2_is_forced():
    idx = index_from_paths(DynGraph(4, [(V1, V2), (V2, V4), (V3, V1), (V4, V3), (V4, V1)]), ALPHA, EXAMPLE_RW, {})
    wid = idx.add_walk_path([V3, V1, V2])
    for seed in range(20):
        idx.walk_restart(wid, 0, Rng(seed))
        assert idx.paths[wid] == [V3, V1, V2]


# ---------------------------------------------------------------------------
# construction


def test_only_dangling_nodes_gives_empty_index():
    idx = build_index(DynGraph(3), ALPHA, 5.0, Rng(0))
    assert len(idx) == 0 and audit(idx.graph, idx) == []


def test_walk_budget_ceiling():
    g = DynGraph(4, [(0, 1), (0, 2), (0, 3)])
    idx = build_index(g, ALPHA, 1.0 / ALPHA, Rng(0))  # beta = 1
    assert len(idx.by_source[0]) == 15
    assert walk_budget(3 * 0.1 / 0.06) == 5  # float noise above an integer
    assert walk_budget(0.0) == 0


def test_walk_view():
    idx = example_index()
    w = idx.walk(4)
    assert w == Walk(4, (V2, V4, V3, V1))
    assert (w.hops, w.source, w.terminal) == (3, V2, V1)
    assert [x.id for x in idx.walks_from(V3)] == [5, 6, 7]


def test_add_walk_path_rejects_bad_moves():
    idx = index_from_paths(example_g0(), ALPHA, EXAMPLE_RW, {})
    with pytest.raises(ValueError):
        idx.add_walk_path([V1, V3])
    idx.add_walk_path([V1, V2], wid=5)
    with pytest.raises(ValueError):
        idx.add_walk_path([V1, V2], wid=3)


def test_zero_hop_walks_carry_no_records():
    g = random_graph(30, 90, 1)
    idx = build_index(g, ALPHA, 5.0, Rng(2))
    zero = [wid for wid, p in idx.paths.items() if len(p) == 1]
    assert zero, "alpha = 0.2 should leave about a fifth of walks at their source"
    assert abs(len(zero) / len(idx) - ALPHA) < 0.05
    assert idx.total_records() == sum(len(p) - 1 for p in idx.paths.values())


def test_expected_crossings_match_ppr():
    # mean cross count equals sum_s |H(s)| * (1 - alpha) / alpha * pi(s, u)
    g = sparse_graph(100, 300, 5)
    rw, builds = 2.0, 1000
    pi = ppr_matrix(g, ALPHA)
    sizes = np.array([walk_budget(g.degree(s) * rw) for s in range(g.n)])
    expected = (1 - ALPHA) / ALPHA * sizes @ pi
    rng = Rng(6)
    samples = np.array([build_index(g, ALPHA, rw, rng).cross_count for _ in range(builds)], dtype=float)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(builds)
    total_se = samples.sum(axis=1).std(ddof=1) / math.sqrt(builds)
    assert abs(mean.sum() - expected.sum()) <= 3 * total_se
    live = se > 0
    z = (mean[live] - expected[live]) / se[live]
    assert np.abs(z).max() < 4.0  # about 6e-5 per node, under 1% across all of them
    assert np.allclose(expected[~live], mean[~live])


# ---------------------------------------------------------------------------
# edge sampling


def sampling_fixture() -> WalkIndex:
    # node 0 has active edges holding 2, 1 and 3 records, all from distinct walks
    g = DynGraph(5, [(0, 1), (0, 2), (0, 3)])
    paths = [[0, 1], [0, 1], [0, 2], [0, 3], [0, 3], [0, 3]]
    idx = index_from_paths(g, ALPHA, 2.0, paths)
    g.insert_edge(0, 4)
    return idx


def test_sampling_count_mean():
    g = DynGraph(4, [(0, 1), (0, 2), (0, 3)])
    idx = index_from_paths(g, ALPHA, 2.0, [[0, 1], [0, 1], [0, 2], [0, 3], [0, 3], [0, 3]])
    rng = Rng(1)
    trials = 100_000
    sizes = [len(idx.edge_sampling(0, 3, rng)) for _ in range(trials)]
    se = math.sqrt(6 * (1 / 3) * (2 / 3) / trials)
    assert abs(np.mean(sizes) - 2.0) <= 3 * se


def test_sampling_nothing_to_sample():
    idx = index_from_paths(DynGraph(3, [(0, 1)]), ALPHA, 1.0, [])
    assert idx.edge_sampling(0, 1, Rng(0)) == set()
    rng = ScriptedRng([("binomial", 0)])
    idx = sampling_fixture()
    assert idx.edge_sampling(0, 4, rng) == set()


def test_sampling_marginals_and_pairs():
    idx = sampling_fixture()
    rng = Rng(2)
    trials = 200_000
    counts = np.zeros(6)
    both = 0
    for _ in range(trials):
        picked = {r.id for r in idx.edge_sampling(0, 4, rng)}
        for wid in picked:
            counts[wid] += 1
        both += 2 in picked and 5 in picked
    sigma = math.sqrt(0.25 * 0.75 / trials)
    assert np.abs(counts / trials - 0.25).max() <= 3 * sigma
    sigma2 = math.sqrt(1 / 16 * 15 / 16 / trials)
    assert abs(both / trials - 1 / 16) <= 3 * sigma2  # selections are independent


def test_literal_sampling_is_biased():
    # the with-replacement variant favours records on short lists
    idx = sampling_fixture()
    rng = Rng(3)
    trials = 50_000
    hits = np.zeros(6)
    for _ in range(trials):
        for r in idx.edge_sampling(0, 4, rng, mode="literal"):
            hits[r.id] += 1
    freq = hits / trials
    for wid, c in enumerate([2, 2, 1, 3, 3, 3]):
        closed = 1 - (1 - 1 / (4 * 3 * c)) ** 6
        assert abs(freq[wid] - closed) < 0.01
    assert freq[2] > 0.4


def test_sampling_keeps_earliest_step_per_walk():
    # one walk leaves node 0 at steps 0, 2 and 4
    g = DynGraph(3, [(0, 1), (1, 0), (0, 2)])
    idx = index_from_paths(g, ALPHA, 1.0, [[0, 1, 0, 1, 0, 2]])
    picked = idx.edge_sampling(0, 1, Rng(0))  # probability 1: every record is drawn
    assert [tuple(r) for r in picked] == [(0, 0)]


def test_sampling_mode_checked():
    with pytest.raises(ValueError):
        sampling_fixture().edge_sampling(0, 4, Rng(0), mode="other")


# ---------------------------------------------------------------------------
# maintenance


def test_restart_at_end_is_noop():
    idx = example_index()
    before = all_paths(idx)
    idx.walk_restart(4, 3, ScriptedRng([]))
    assert all_paths(idx) == before
    with pytest.raises(ValueError):
        idx.walk_restart(4, 4, Rng(0))


def test_restarts_preserve_hops():
    g = sparse_graph(50, 200, 7)
    idx = build_index(g, ALPHA, 3.0, Rng(8))
    rng = Rng(9)
    walks = [wid for wid, p in idx.paths.items() if len(p) > 1]
    for _ in range(10_000):
        wid = walks[rng.randbelow(len(walks))]
        hops = len(idx.paths[wid]) - 1
        idx.walk_restart(wid, rng.randbelow(hops + 1), rng)
        assert len(idx.paths[wid]) - 1 == hops
    assert audit(g, idx) == []


def test_insert_without_crossings_only_adds_walks():
    g = DynGraph(3, [(1, 2)])
    idx = build_index(g, ALPHA, 2.5, Rng(0))
    assert idx.crossings(0) == 0
    g.insert_edge(0, 1)
    stats = idx.update_insert(0, 1, Rng(1))
    assert stats.touched == 0 and stats.added == walk_budget(2.5) == 3
    assert audit(g, idx) == []


def test_update_requires_graph_change_first():
    idx = example_index()
    with pytest.raises(ValueError):
        idx.update_insert(V4, V1, Rng(0))
    with pytest.raises(ValueError):
        idx.update_delete(V3, V2, Rng(0))


def test_deleting_only_out_edge_parks_walks():
    g = DynGraph(3, [(0, 1), (1, 2), (2, 0)])
    idx = build_index(g, ALPHA, 4.0, Rng(4))
    crossing = {wid for wid, p in idx.paths.items() if 1 in p[:-1]}
    assert crossing
    g.delete_edge(1, 2)
    idx.update_delete(1, 2, Rng(5))
    assert idx.by_source[1] == []
    assert audit(g, idx) == []
    parked = idx.records_at_dangling(1)
    assert parked and all(idx.paths[r.id][r.step + 1] == 1 for r in parked)
    # re-inserting consumes every parked record
    g.insert_edge(1, 2)
    stats = idx.update_insert(1, 2, Rng(6))
    assert stats.touched == len({r.id for r in parked})
    assert idx.records_at_dangling(1) == [] and audit(g, idx) == []


update_script = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), min_size=1, max_size=60)


@given(st.integers(0, 10_000), update_script, st.sampled_from([0.7, 1.5, 5.0]))
@settings(max_examples=60, deadline=None)
def test_random_updates_stay_consistent(seed, toggles, rw):
    g = sparse_graph(12, 20, seed)
    idx = build_index(g, ALPHA, rw, Rng(seed))
    rng = Rng(seed + 1)
    for u, v in toggles:
        if g.has_edge(u, v):
            g.delete_edge(u, v)
            idx.update_delete(u, v, rng)
        else:
            g.insert_edge(u, v)
            idx.update_insert(u, v, rng)
        assert audit(g, idx) == []


def test_long_random_arrival_run():
    g = random_graph(200, 2000, 10)
    idx = build_index(g, ALPHA, 5.0, Rng(11))
    rng = Rng(12)
    absent = [(u, v) for u in range(200) for v in range(200) if u != v and not g.has_edge(u, v)]
    present = list(g.edges())
    touched = []
    for step in range(2000):
        if rng.random() < 0.5:
            i = rng.randbelow(len(absent))
            e = absent[i]
            absent[i] = absent[-1]
            absent.pop()
            present.append(e)
            g.insert_edge(*e)
            touched.append(idx.update_insert(*e, rng).touched)
        else:
            i = rng.randbelow(len(present))
            e = present[i]
            present[i] = present[-1]
            present.pop()
            absent.append(e)
            g.delete_edge(*e)
            touched.append(idx.update_delete(*e, rng).touched)
        if step % 250 == 0:
            assert audit(g, idx) == []
    assert audit(g, idx) == []
    assert np.mean(touched) <= (1 - ALPHA) / ALPHA * (5.0 + 1)


# ---------------------------------------------------------------------------
# audit


@pytest.fixture
def clean():
    g = sparse_graph(40, 150, 3)
    return g, build_index(g, ALPHA, 3.0, Rng(4))


def test_audit_counter_fault(clean):
    g, idx = clean
    idx.cross_count[7] += 1
    problems = audit(g, idx)
    assert len(problems) == 1 and problems[0].startswith("cross_count[7]")


def test_audit_path_fault(clean):
    g, idx = clean
    wid = next(w for w, p in idx.paths.items() if len(p) > 2)
    idx.paths[wid][1] = (idx.paths[wid][1] + 1) % g.n
    assert any(f"{{{wid}," in p for p in audit(g, idx))


def test_audit_missing_record(clean):
    g, idx = clean
    key = next(iter(idx.edge_records))
    idx.edge_records[key].pop()
    assert audit(g, idx)


def test_audit_stale_edge(clean):
    g, idx = clean
    u, v = next((u, v) for u, v in g.edges() if idx.records_on_edge(u, v))
    g.delete_edge(u, v)
    problems = audit(g, idx)
    assert any("not an edge" in p for p in problems)


def test_audit_budget_and_listing(clean):
    g, idx = clean
    u = next(u for u in range(g.n) if idx.by_source[u])
    wid = idx.by_source[u].pop()
    problems = audit(g, idx)
    assert any(p.startswith(f"|H({u})|") for p in problems)
    assert any("listed by source" in p for p in problems)
    idx.by_source[u].append(wid)
    idx.by_source[u].reverse()
    if len(idx.by_source[u]) > 1:
        assert any("ascending" in p for p in audit(g, idx))


def test_audit_active_registry(clean):
    g, idx = clean
    u = next(u for u in range(g.n) if len(idx.active[u]) > 1)
    idx.active[u].reverse()
    assert any("active registry" in p for p in audit(g, idx))


def test_audit_record_bound(clean):
    g, idx = clean
    u = next(u for u in range(g.n) if idx.active[u])
    idx.record_bound[u] = 0
    assert any(p.startswith(f"record_bound[{u}]") for p in audit(g, idx))


# ---------------------------------------------------------------------------
# snapshots


def test_snapshot_roundtrip(tmp_path, clean):
    g, idx = clean
    # a deletion leaves gaps in the id sequence; load renumbers in order
    e = next(iter(g.edges()))
    g.delete_edge(*e)
    idx.update_delete(*e, Rng(10))
    path = tmp_path / "idx.bin"
    save_snapshot(idx, path)
    back = load_snapshot(g, path)
    assert audit(g, back) == []
    assert sorted(back.paths) == list(range(len(idx)))
    assert [back.paths[w] for w in sorted(back.paths)] == [idx.paths[w] for w in sorted(idx.paths)]
    assert back.cross_count == idx.cross_count
    assert (back.alpha, back.r_max_times_omega) == (ALPHA, 3.0)

    other = g.copy()
    other.insert_edge(*e)
    with pytest.raises(ValueError):
        load_snapshot(other, path)
    (tmp_path / "bad.bin").write_bytes(b"NOPE1" + path.read_bytes()[5:])
    with pytest.raises(ValueError):
        load_snapshot(g, tmp_path / "bad.bin")
