"""Random-walk index with per-edge crossing records and O(1) maintenance.

Every node ``u`` with out-degree ``d(u) >= 1`` owns ``ceil(d(u) * r_max * omega)``
alpha-decay walks.  Each step of a stored walk that leaves node ``u`` has one
crossing record ``(walk id, step)``, filed under the edge it traversed or, for
the implicit self-loop at a dangling node, under that node's dangling bucket.
Walks that stop at their source immediately carry no records; they are kept
as id-only entries so they still count towards the per-node walk budget.

Records are packed into one int (``id << 32 | step``).  Each walk keeps, per
step, the slot of its record (``-(slot + 1)`` for a dangling bucket), so a
record is removed by swap-remove plus one back-reference fixup.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from itertools import chain
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dyngraph import DynGraph
from .rng import Rng, ScriptedRng

_SHIFT = 32
_MASK = (1 << _SHIFT) - 1
_EPS = 1e-9


def walk_budget(x: float) -> int:
    """``ceil(x)`` that ignores float noise just above an integer."""
    return max(0, math.ceil(x - _EPS))


@dataclass(frozen=True)
class Walk:
    id: int
    path: tuple[int, ...]

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def source(self) -> int:
        return self.path[0]

    @property
    def terminal(self) -> int:
        return self.path[-1]


class CrossingRecord(NamedTuple):
    id: int
    step: int


@dataclass
class UpdateStats:
    touched: int = 0  # walks redirected or restarted
    added: int = 0
    removed: int = 0


class WalkIndex:
    """The index ``H`` together with its auxiliary record structures.

    The index holds a reference to the graph it mirrors.  Callers mutate the
    graph first and then call :meth:`update_insert` / :meth:`update_delete`.
    """

    def __init__(self, graph: DynGraph, alpha: float, r_max_times_omega: float) -> None:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        if not r_max_times_omega > 0.0:
            raise ValueError("r_max * omega must be positive")
        n = graph.n
        self.graph = graph
        self.alpha = alpha
        self.r_max_times_omega = r_max_times_omega
        self.paths: dict[int, list[int]] = {}
        self.slots: dict[int, list[int]] = {}
        self.by_source: list[list[int]] = [[] for _ in range(n)]
        self.edge_records: dict[int, list[int]] = {}
        self.dangling_records: dict[int, list[int]] = {}
        self.cross_count: list[int] = [0] * n
        self.active: list[list[int]] = [[] for _ in range(n)]
        self.active_pos: dict[int, int] = {}
        # upper bound on the longest record list among u's active edges
        self.record_bound: list[int] = [0] * n
        self.next_id = 0

    # ------------------------------------------------------------------
    # read access

    def walk_count_target(self, u: int) -> int:
        return walk_budget(self.graph.degree(u) * self.r_max_times_omega)

    def __len__(self) -> int:
        return len(self.paths)

    def walk(self, wid: int) -> Walk:
        return Walk(wid, tuple(self.paths[wid]))

    def walks_from(self, u: int) -> list[Walk]:
        return [self.walk(wid) for wid in self.by_source[u]]

    def terminal(self, wid: int) -> int:
        return self.paths[wid][-1]

    def crossings(self, u: int) -> int:
        return self.cross_count[u]

    def records_on_edge(self, u: int, v: int) -> list[CrossingRecord]:
        lst = self.edge_records.get(u * self.graph.n + v, ())
        return [CrossingRecord(r >> _SHIFT, r & _MASK) for r in lst]

    def records_at_dangling(self, u: int) -> list[CrossingRecord]:
        lst = self.dangling_records.get(u, ())
        return [CrossingRecord(r >> _SHIFT, r & _MASK) for r in lst]

    def active_edges(self, u: int) -> list[int]:
        """Out-neighbours ``v`` whose edge ``(u, v)`` currently carries records."""
        return list(self.active[u])

    def total_records(self) -> int:
        return sum(map(len, self.edge_records.values())) + sum(map(len, self.dangling_records.values()))

    # ------------------------------------------------------------------
    # record bookkeeping

    def _add_record(self, wid: int, step: int, u: int, v: int) -> int:
        """File the record for ``wid`` leaving ``u`` towards ``v``; returns its slot code."""
        rec = (wid << _SHIFT) | step
        self.cross_count[u] += 1
        if u == v and not self.graph.out_adj[u]:
            lst = self.dangling_records.get(u)
            if lst is None:
                lst = self.dangling_records[u] = []
            lst.append(rec)
            return -len(lst)
        key = u * self.graph.n + v
        lst = self.edge_records.get(key)
        if lst is None:
            lst = self.edge_records[key] = []
            act = self.active[u]
            self.active_pos[key] = len(act)
            act.append(v)
        lst.append(rec)
        if len(lst) > self.record_bound[u]:
            self.record_bound[u] = len(lst)
        return len(lst) - 1

    def _remove_record(self, wid: int, step: int) -> None:
        path = self.paths[wid]
        code = self.slots[wid][step]
        u = path[step]
        self.cross_count[u] -= 1
        if code < 0:
            lst = self.dangling_records[u]
            slot = -code - 1
            last = lst.pop()
            if slot < len(lst):
                lst[slot] = last
                self.slots[last >> _SHIFT][last & _MASK] = code
            elif not lst:
                del self.dangling_records[u]
            return
        n = self.graph.n
        key = u * n + path[step + 1]
        lst = self.edge_records[key]
        last = lst.pop()
        if code < len(lst):
            lst[code] = last
            self.slots[last >> _SHIFT][last & _MASK] = code
        elif not lst:
            del self.edge_records[key]
            act = self.active[u]
            pos = self.active_pos.pop(key)
            moved = act.pop()
            if pos < len(act):
                act[pos] = moved
                self.active_pos[u * n + moved] = pos

    def _truncate(self, wid: int, keep_hops: int) -> None:
        """Drop steps ``keep_hops..`` of the walk together with their records."""
        path = self.paths[wid]
        for step in range(len(path) - 2, keep_hops - 1, -1):
            self._remove_record(wid, step)
        del path[keep_hops + 1:]
        del self.slots[wid][keep_hops:]

    def _extend(self, wid: int, rng: Rng | ScriptedRng, hops: int | None) -> None:
        """Walk on from the current terminal.

        With ``hops=None`` the walk stops with probability ``alpha`` before
        each step; otherwise it takes exactly enough steps to reach ``hops``.
        Dangling nodes repeat themselves.
        """
        path = self.paths[wid]
        slots = self.slots[wid]
        adj = self.graph.out_adj
        alpha = self.alpha
        add = self._add_record
        cur = path[-1]
        step = len(path) - 1
        while True:
            if hops is None:
                if rng.random() < alpha:
                    return
            elif step >= hops:
                return
            nbrs = adj[cur]
            nxt = nbrs[rng.randbelow(len(nbrs))] if nbrs else cur
            slots.append(add(wid, step, cur, nxt))
            path.append(nxt)
            cur = nxt
            step += 1

    def _new_walk(self, u: int, rng: Rng | ScriptedRng) -> int:
        wid = self.next_id
        self.next_id += 1
        self.paths[wid] = [u]
        self.slots[wid] = []
        self._extend(wid, rng, None)
        self.by_source[u].append(wid)
        return wid

    def _erase_walk(self, wid: int) -> None:
        self._truncate(wid, 0)
        del self.paths[wid]
        del self.slots[wid]

    def add_walk_path(self, path: Sequence[int], wid: int | None = None) -> int:
        """Insert a walk with a given path (snapshot restore, scripted tests).

        Ids must be added in increasing order so per-source lists stay sorted.
        """
        if wid is None:
            wid = self.next_id
        if wid < self.next_id:
            raise ValueError(f"walk id {wid} not above existing ids")
        self.next_id = wid + 1
        p = [int(path[0])]
        self.paths[wid] = p
        slots = self.slots[wid] = []
        g = self.graph
        for step in range(len(path) - 1):
            u, v = int(path[step]), int(path[step + 1])
            if not (g.has_edge(u, v) or (u == v and not g.out_adj[u])):
                del self.paths[wid], self.slots[wid]
                raise ValueError(f"walk {wid} step {step}: ({u}, {v}) is not a move on the graph")
            slots.append(self._add_record(wid, step, u, v))
            p.append(v)
        self.by_source[p[0]].append(wid)
        return wid

    # ------------------------------------------------------------------
    # maintenance

    def walk_restart(self, wid: int, from_step: int, rng: Rng | ScriptedRng) -> None:
        """Resample the walk after ``path[from_step]``, keeping its hop count."""
        path = self.paths[wid]
        hops = len(path) - 1
        if not 0 <= from_step <= hops:
            raise ValueError(f"from_step {from_step} outside 0..{hops}")
        self._truncate(wid, from_step)
        self._extend(wid, rng, hops)

    def _redirect(self, wid: int, step: int, v: int, rng: Rng | ScriptedRng) -> None:
        path = self.paths[wid]
        hops = len(path) - 1
        self._truncate(wid, step)
        u = path[step]
        self.slots[wid].append(self._add_record(wid, step, u, v))
        path.append(v)
        self._extend(wid, rng, hops)

    def _rebound(self, u: int) -> None:
        n = self.graph.n
        self.record_bound[u] = max((len(self.edge_records[u * n + v]) for v in self.active[u]), default=0)

    def edge_sampling(
        self,
        u: int,
        new_degree: int,
        rng: Rng | ScriptedRng,
        mode: str = "exact",
    ) -> set[CrossingRecord]:
        """Select records crossing ``u``, each with probability ``1/new_degree``.

        The number of selections is ``k ~ Binomial(crossings(u), 1/new_degree)``.
        Each selection draws a uniform active edge and a uniform record on it.
        In ``"exact"`` mode the draw is accepted with probability
        ``len(list) / bound`` and repeats are redrawn, so the ``k`` records are
        a uniform sample without replacement over all of ``u``'s records.
        ``"literal"`` skips both corrections.  The result keeps only the
        earliest selected step of each walk.
        """
        if mode not in ("exact", "literal"):
            raise ValueError(f"unknown sampling mode {mode!r}")
        total = self.cross_count[u]
        if total == 0 or new_degree <= 0:
            return set()
        k = rng.binomial(total, 1.0 / new_degree)
        if k == 0:
            return set()
        n = self.graph.n
        act = self.active[u]
        records = self.edge_records
        exact = mode == "exact"
        chosen: set[int] = set()
        picks: list[int] = []
        rejected = 0
        while len(picks) < k:
            v = act[rng.randbelow(len(act))]
            lst = records[u * n + v]
            rec = lst[rng.randbelow(len(lst))]
            if exact:
                bound = self.record_bound[u]
                if len(lst) < bound and rng.random() * bound >= len(lst):
                    rejected += 1
                    if rejected > 4 * len(act) + 8:
                        self._rebound(u)
                        rejected = 0
                    continue
                if rec in chosen:
                    continue
                chosen.add(rec)
            picks.append(rec)
        earliest: dict[int, int] = {}
        for rec in picks:
            wid, step = rec >> _SHIFT, rec & _MASK
            if step < earliest.get(wid, step + 1):
                earliest[wid] = step
        return {CrossingRecord(w, s) for w, s in earliest.items()}

    def update_insert(self, u: int, v: int, rng: Rng | ScriptedRng, mode: str = "exact") -> UpdateStats:
        """Repair the index after ``(u, v)`` was inserted into the graph."""
        if not self.graph.has_edge(u, v):
            raise ValueError(f"insert ({u}, {v}) into the graph before updating the index")
        stats = UpdateStats()
        d_new = self.graph.degree(u)
        if d_new == 1:
            # u was dangling: every crossing must now take the new edge
            earliest: dict[int, int] = {}
            for rec in self.dangling_records.get(u, ()):
                wid, step = rec >> _SHIFT, rec & _MASK
                if step < earliest.get(wid, step + 1):
                    earliest[wid] = step
            selected = sorted(earliest.items())
        else:
            selected = sorted(self.edge_sampling(u, d_new, rng, mode))
        for wid, step in selected:
            self._redirect(wid, step, v, rng)
        stats.touched = len(selected)
        target = self.walk_count_target(u)
        while len(self.by_source[u]) < target:
            self._new_walk(u, rng)
            stats.added += 1
        return stats

    def update_delete(self, u: int, v: int, rng: Rng | ScriptedRng) -> UpdateStats:
        """Repair the index after ``(u, v)`` was deleted from the graph."""
        if self.graph.has_edge(u, v):
            raise ValueError(f"delete ({u}, {v}) from the graph before updating the index")
        stats = UpdateStats()
        own = self.by_source[u]
        target = self.walk_count_target(u)
        while len(own) > target:
            self._erase_walk(own.pop(rng.randbelow(len(own))))
            stats.removed += 1
        key = u * self.graph.n + v
        earliest: dict[int, int] = {}
        for rec in self.edge_records.get(key, ()):
            wid, step = rec >> _SHIFT, rec & _MASK
            if step < earliest.get(wid, step + 1):
                earliest[wid] = step
        for wid, step in sorted(earliest.items()):
            self.walk_restart(wid, step, rng)
        stats.touched = len(earliest)
        if key in self.edge_records:
            raise AssertionError(f"records left on deleted edge ({u}, {v})")
        return stats

    # ------------------------------------------------------------------
    # consistency

    def audit(self) -> list[str]:
        return audit(self.graph, self)


def build_index(
    graph: DynGraph,
    alpha: float,
    r_max_times_omega: float,
    rng: Rng | ScriptedRng,
) -> WalkIndex:
    """Sample ``ceil(d(u) * r_max * omega)`` walks from every node, in node order."""
    index = WalkIndex(graph, alpha, r_max_times_omega)
    for u in range(graph.n):
        for _ in range(index.walk_count_target(u)):
            index._new_walk(u, rng)
    return index


def index_from_paths(
    graph: DynGraph,
    alpha: float,
    r_max_times_omega: float,
    paths: Iterable[Sequence[int]] | dict[int, Sequence[int]],
) -> WalkIndex:
    """Index holding exactly the given walks (ids taken from dict keys or position)."""
    index = WalkIndex(graph, alpha, r_max_times_omega)
    items = sorted(paths.items()) if isinstance(paths, dict) else enumerate(paths)
    for wid, path in items:
        index.add_walk_path(path, wid)
    return index


def audit(graph: DynGraph, index: WalkIndex, limit: int = 20) -> list[str]:
    """Every violated index invariant, as readable messages; empty means consistent.

    Checks per-source lists and walk budgets, that every record points back
    to a walk step that takes exactly its edge (or dangling self-loop) from
    the recorded slot, that records and walk steps are equinumerous (so the
    two are in bijection), that record lists sit on live edges, and the
    per-node counters, bounds and active registries.  At most ``limit``
    messages are reported per record check.
    """
    problems: list[str] = []
    n = graph.n
    out_adj = graph.out_adj
    paths = index.paths

    lens = list(map(len, index.by_source))
    for u in range(n):
        target = walk_budget(len(out_adj[u]) * index.r_max_times_omega)
        if lens[u] != target:
            problems.append(f"|H({u})| = {lens[u]}, expected {target}")
    if index.slots.keys() != paths.keys():
        problems.append("walks and back-reference tables hold different ids")
        return problems

    # flatten walks
    count = len(paths)
    wids = np.fromiter(paths.keys(), np.int64, count)
    plen = np.fromiter(map(len, paths.values()), np.int64, count)
    slot_lists = [index.slots[w] for w in paths]
    slen = np.fromiter(map(len, slot_lists), np.int64, count)
    bad_len = np.flatnonzero(slen != plen - 1)
    for i in bad_len[:limit]:
        problems.append(f"walk {wids[i]}: {slen[i]} back-references for {plen[i] - 1} hops")
    if len(bad_len):
        return problems
    flat_path = np.fromiter(chain.from_iterable(paths.values()), np.int64, int(plen.sum()))
    flat_slot = np.fromiter(chain.from_iterable(slot_lists), np.int64, int(slen.sum()))
    steps = int(slen.sum())
    size = max(index.next_id, 1)
    poff = np.full(size, -1, np.int64)
    soff = np.zeros(size, np.int64)
    hops = np.zeros(size, np.int64)
    poff[wids] = np.concatenate(([0], np.cumsum(plen)[:-1])) if count else []
    soff[wids] = np.concatenate(([0], np.cumsum(slen)[:-1])) if count else []
    hops[wids] = slen

    # per-source lists: ascending, disjoint, covering every walk, right sources
    listed = np.fromiter(chain.from_iterable(index.by_source), np.int64, sum(lens))
    owner = np.repeat(np.arange(n, dtype=np.int64), lens)
    ends = np.cumsum(lens)[:-1]
    rising = np.diff(listed) > 0
    rising[ends[(ends > 0) & (ends < len(listed))] - 1] = True
    for i in np.flatnonzero(~rising)[:limit]:
        problems.append(f"H({owner[i]}) not in ascending id order at walk {listed[i + 1]}")
    stored = (listed >= 0) & (listed < size)
    stored[stored] &= poff[listed[stored]] >= 0
    for i in np.flatnonzero(~stored)[:limit]:
        problems.append(f"H({owner[i]}) lists walk {listed[i]}, which is not stored")
    if len(np.unique(listed)) != len(listed) or len(listed) != count:
        problems.append(f"{count} walks stored, {len(listed)} listed by source ({len(np.unique(listed))} distinct)")
    ok_ids, ok_owner = listed[stored], owner[stored]
    starts = flat_path[poff[ok_ids]]
    for i in np.flatnonzero(starts != ok_owner)[:limit]:
        problems.append(f"walk {ok_ids[i]} starts at {starts[i]} but is listed under {ok_owner[i]}")

    def check(kind: str, keys: list[int], lists: list[list[int]]) -> np.ndarray:
        lens = np.fromiter(map(len, lists), np.int64, len(lists))
        total = int(lens.sum())
        recs = np.fromiter(chain.from_iterable(lists), np.int64, total)
        key = np.repeat(np.asarray(keys, np.int64), lens)
        start = np.repeat(np.cumsum(lens) - lens, lens)
        slot = np.arange(total, dtype=np.int64) - start
        wid = recs >> _SHIFT
        step = recs & _MASK
        known = (wid < size) & (step >= 0)
        known[known] &= poff[wid[known]] >= 0
        known[known] &= step[known] < hops[wid[known]]
        ok = known.copy()
        w, st = wid[known], step[known]
        u = flat_path[poff[w] + st]
        v = flat_path[poff[w] + st + 1]
        code = flat_slot[soff[w] + st]
        if kind == "edge":
            ok[known] = (u * n + v == key[known]) & (code == slot[known])
        else:
            ok[known] = (u == key[known]) & (v == key[known]) & (code == -(slot[known] + 1))
        for i in np.flatnonzero(~ok)[:limit]:
            where = f"edge ({key[i] // n}, {key[i] % n})" if kind == "edge" else f"dangling bucket of {key[i]}"
            problems.append(f"record {{{wid[i]},{step[i]}}} in {where} slot {slot[i]} does not match its walk step")
        return np.where(kind == "edge", key // n, key) if total else np.zeros(0, np.int64)

    edge_keys = list(index.edge_records.keys())
    edge_lists = list(index.edge_records.values())
    dang_keys = list(index.dangling_records.keys())
    dang_lists = list(index.dangling_records.values())
    rec_nodes = np.concatenate((check("edge", edge_keys, edge_lists), check("dangling", dang_keys, dang_lists)))
    if len(rec_nodes) != steps:
        problems.append(f"{len(rec_nodes)} crossing records for {steps} walk steps")

    longest = [0] * n
    for key, lst in zip(edge_keys, edge_lists):
        u, v = divmod(key, n)
        if not lst:
            problems.append(f"empty record list kept for edge ({u}, {v})")
        if v not in graph.out_pos[u]:
            problems.append(f"records filed under ({u}, {v}), which is not an edge")
        if len(lst) > longest[u]:
            longest[u] = len(lst)
        if key not in index.active_pos:
            problems.append(f"edge ({u}, {v}) has records but is not in the active registry of {u}")
    for u, lst in zip(dang_keys, dang_lists):
        if out_adj[u]:
            problems.append(f"dangling bucket of {u} non-empty while d({u}) = {len(out_adj[u])}")
        if not lst:
            problems.append(f"empty dangling bucket kept for {u}")

    per_node = np.bincount(rec_nodes, minlength=n) if len(rec_nodes) else np.zeros(n, np.int64)
    cross = np.asarray(index.cross_count, np.int64)
    for u in np.flatnonzero(cross != per_node):
        problems.append(f"cross_count[{u}] = {cross[u]}, records say {per_node[u]}")
    for u in range(n):
        if index.record_bound[u] < longest[u]:
            problems.append(f"record_bound[{u}] = {index.record_bound[u]} below longest list {longest[u]}")
        for pos, v in enumerate(index.active[u]):
            key = u * n + v
            if index.active_pos.get(key) != pos:
                problems.append(f"active registry of {u}: edge ({u}, {v}) slot mismatch")
            if key not in index.edge_records:
                problems.append(f"active registry of {u} lists ({u}, {v}) without records")
    if len(index.active_pos) != len(index.edge_records):
        problems.append(
            f"active registry holds {len(index.active_pos)} edges, {len(index.edge_records)} carry records"
        )
    return problems


# ---------------------------------------------------------------------------
# snapshots

_MAGIC = b"FIRM1"
_HEADER = struct.Struct("<QQddQ")


def save_snapshot(index: WalkIndex, path: str | os.PathLike) -> None:
    """Write the walks; records and counters are rebuilt on load."""
    g = index.graph
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(g.n, g.m, index.alpha, index.r_max_times_omega, len(index.paths)))
        for wid in sorted(index.paths):
            p = index.paths[wid]
            fh.write(struct.pack(f"<I{len(p)}I", len(p), *p))


def load_snapshot(graph: DynGraph, path: str | os.PathLike) -> WalkIndex:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not an index snapshot")
    off = len(_MAGIC)
    n, m, alpha, rw, count = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    if n != graph.n or m != graph.m:
        raise ValueError(f"{path}: snapshot is for n={n}, m={m}; graph has n={graph.n}, m={graph.m}")
    index = WalkIndex(graph, alpha, rw)
    for wid in range(count):
        (length,) = struct.unpack_from("<I", data, off)
        off += 4
        nodes = struct.unpack_from(f"<{length}I", data, off)
        off += 4 * length
        index.add_walk_path(nodes, wid)
    return index
