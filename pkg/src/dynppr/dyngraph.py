"""Mutable directed graph, edge-list ingestion and workload generation."""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import DuplicateEdge, MissingEdge, ParseError, PoolExhausted
from .rng import Rng, ScriptedRng, as_rng


class DynGraph:
    """Directed simple graph over a fixed node universe ``0..n-1``.

    Out-neighbours are kept in a per-node list; ``out_pos[u]`` maps each
    neighbour to its slot so deletion is a swap-remove.  The order of
    ``out_adj[u]`` carries no meaning.
    """

    __slots__ = ("n", "m", "out_adj", "out_pos")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        if n < 0:
            raise ValueError("node count must be non-negative")
        self.n = n
        self.m = 0
        self.out_adj: list[list[int]] = [[] for _ in range(n)]
        self.out_pos: list[dict[int, int]] = [{} for _ in range(n)]
        for u, v in edges:
            self.insert_edge(u, v)

    def _check(self, u: int, v: int) -> None:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise IndexError(f"edge ({u}, {v}) outside node range 0..{self.n - 1}")

    def degree(self, u: int) -> int:
        return len(self.out_adj[u])

    def out_neighbors(self, u: int) -> list[int]:
        """The live neighbour list of ``u``; callers must not mutate it."""
        return self.out_adj[u]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.out_pos[u]

    def insert_edge(self, u: int, v: int) -> None:
        self._check(u, v)
        pos = self.out_pos[u]
        if v in pos:
            raise DuplicateEdge(u, v)
        adj = self.out_adj[u]
        pos[v] = len(adj)
        adj.append(v)
        self.m += 1

    def delete_edge(self, u: int, v: int) -> None:
        self._check(u, v)
        pos = self.out_pos[u]
        slot = pos.pop(v, None)
        if slot is None:
            raise MissingEdge(u, v)
        adj = self.out_adj[u]
        last = adj.pop()
        if last != v:
            adj[slot] = last
            pos[last] = slot
        self.m -= 1

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, adj in enumerate(self.out_adj):
            for v in adj:
                yield u, v

    def edge_sets(self) -> list[frozenset[int]]:
        """Order-free view of the adjacency, for equality checks."""
        return [frozenset(adj) for adj in self.out_adj]

    def copy(self) -> "DynGraph":
        g = DynGraph(self.n)
        g.m = self.m
        g.out_adj = [list(adj) for adj in self.out_adj]
        g.out_pos = [dict(pos) for pos in self.out_pos]
        return g

    def audit(self) -> list[str]:
        problems = []
        total = 0
        for u in range(self.n):
            adj, pos = self.out_adj[u], self.out_pos[u]
            total += len(adj)
            if len(adj) != len(pos):
                problems.append(f"node {u}: {len(adj)} neighbours but {len(pos)} slots")
            for i, v in enumerate(adj):
                if pos.get(v) != i:
                    problems.append(f"node {u}: neighbour {v} at slot {i}, out_pos says {pos.get(v)}")
        if total != self.m:
            problems.append(f"sum of degrees {total} != m {self.m}")
        return problems

    def __repr__(self) -> str:
        return f"DynGraph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------------------
# edge lists


@dataclass
class EdgeList:
    n: int
    edges: list[tuple[int, int]]
    labels: list[int]  # dense id -> original label


def read_edge_list(path: str | os.PathLike, directed: bool = True) -> EdgeList:
    """Parse a whitespace separated ``u v`` file.

    Labels are compacted to ``0..n-1`` in ascending label order.  Undirected
    input yields both directions; repeated edges collapse to one.
    """
    raw: list[tuple[int, int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#") or text.startswith("%"):
                continue
            parts = text.split()
            if len(parts) < 2:
                raise ParseError(str(path), lineno, text)
            try:
                raw.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ParseError(str(path), lineno, text) from None
    labels = sorted({x for e in raw for x in e})
    dense = {label: i for i, label in enumerate(labels)}
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    for a, b in raw:
        pairs = [(dense[a], dense[b])]
        if not directed and a != b:
            pairs.append((dense[b], dense[a]))
        for e in pairs:
            if e not in seen:
                seen.add(e)
                edges.append(e)
    return EdgeList(len(labels), edges, labels)


def load_edge_list(path: str | os.PathLike, directed: bool = True) -> DynGraph:
    el = read_edge_list(path, directed)
    return DynGraph(el.n, el.edges)


def write_edge_list(path: str | os.PathLike, edges: Iterable[tuple[int, int]]) -> None:
    with open(path, "w") as fh:
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def shuffle(items: list, rng: Rng | ScriptedRng) -> None:
    for i in range(len(items) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        items[i], items[j] = items[j], items[i]


@dataclass
class GraphPool:
    """Initial graph plus the edges held back for insertion."""

    graph: DynGraph
    reserved: list[tuple[int, int]] = field(default_factory=list)


def split_edges(
    n: int,
    edges: Sequence[tuple[int, int]],
    fraction: float = 0.9,
    rng: Rng | ScriptedRng | int | None = None,
) -> GraphPool:
    """Random-order split: the first ``fraction`` of edges builds the graph."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("split fraction must lie in [0, 1]")
    rng = as_rng(rng)
    order = list(edges)
    shuffle(order, rng)
    cut = int(round(fraction * len(order)))
    return GraphPool(DynGraph(n, order[:cut]), order[cut:])


# ---------------------------------------------------------------------------
# workloads


class EventKind(str, enum.Enum):
    INSERT = "I"
    DELETE = "D"
    QUERY = "Q"
    TOPK = "T"


@dataclass(frozen=True)
class WorkloadEvent:
    kind: EventKind
    u: int
    v: int = -1
    k: int = 0

    @property
    def is_update(self) -> bool:
        return self.kind in (EventKind.INSERT, EventKind.DELETE)

    def to_line(self) -> str:
        if self.is_update:
            return f"{self.kind.value} {self.u} {self.v}"
        if self.kind is EventKind.TOPK:
            return f"T {self.u} {self.k}"
        return f"Q {self.u}"

    @classmethod
    def from_line(cls, line: str) -> "WorkloadEvent":
        parts = line.split()
        kind = EventKind(parts[0])
        if kind in (EventKind.INSERT, EventKind.DELETE):
            u, v = int(parts[1]), int(parts[2])
            return cls(kind, u, v)
        if kind is EventKind.TOPK:
            return cls(kind, int(parts[1]), k=int(parts[2]))
        if len(parts) != 2:
            raise ValueError(line)
        return cls(kind, int(parts[1]))


class IndexedSet:
    """List-backed set with O(1) add, remove and uniform choice."""

    def __init__(self, items: Iterable = ()) -> None:
        self._items: list = []
        self._pos: dict = {}
        for x in items:
            self.add(x)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, x) -> bool:
        return x in self._pos

    def add(self, x) -> None:
        if x not in self._pos:
            self._pos[x] = len(self._items)
            self._items.append(x)

    def remove(self, x) -> None:
        slot = self._pos.pop(x)
        last = self._items.pop()
        if slot < len(self._items):
            self._items[slot] = last
            self._pos[last] = slot

    def choice(self, rng: Rng | ScriptedRng):
        return self._items[rng.randbelow(len(self._items))]


class WorkloadGenerator:
    """Draws random-arrival updates and uniform queries against a pool.

    Insertions take a uniformly random reserved edge; deletions take a
    uniformly random edge of the current (simulated) graph and return it to
    the reserve, so long workloads keep the edge count roughly stable.
    """

    def __init__(self, pool: GraphPool, rng: Rng | ScriptedRng | int | None = None) -> None:
        self.n = pool.graph.n
        self.rng = as_rng(rng)
        self.current = IndexedSet(pool.graph.edges())
        self.reserved = IndexedSet(pool.reserved)

    def insert(self) -> WorkloadEvent:
        if not len(self.reserved):
            raise PoolExhausted("no reserved edges left to insert")
        e = self.reserved.choice(self.rng)
        self.reserved.remove(e)
        self.current.add(e)
        return WorkloadEvent(EventKind.INSERT, *e)

    def delete(self) -> WorkloadEvent:
        if not len(self.current):
            raise PoolExhausted("graph has no edges left to delete")
        e = self.current.choice(self.rng)
        self.current.remove(e)
        self.reserved.add(e)
        return WorkloadEvent(EventKind.DELETE, *e)

    def query(self, k: int | None = None) -> WorkloadEvent:
        s = self.rng.randbelow(self.n)
        if k:
            return WorkloadEvent(EventKind.TOPK, s, k=k)
        return WorkloadEvent(EventKind.QUERY, s)


def gen_workload(
    pool: GraphPool,
    update_pct: float,
    count: int,
    seed: int | None = None,
    rng: Rng | ScriptedRng | None = None,
    *,
    insert_prob: float = 0.5,
    k: int | None = None,
) -> list[WorkloadEvent]:
    """``count`` events of which ``update_pct`` percent are updates.

    Each update is an insertion with probability ``insert_prob`` and a
    deletion otherwise.  Queries are full single-source queries, or top-k
    queries when ``k`` is given.
    """
    if not 0 <= update_pct <= 100:
        raise ValueError("update_pct must lie in [0, 100]")
    if rng is None:
        rng = Rng(seed)
    gen = WorkloadGenerator(pool, rng)
    n_updates = int(round(count * update_pct / 100))
    kinds = [True] * n_updates + [False] * (count - n_updates)
    shuffle(kinds, rng)
    events = []
    for is_update in kinds:
        if not is_update:
            events.append(gen.query(k))
        elif rng.random() < insert_prob:
            events.append(gen.insert())
        else:
            events.append(gen.delete())
    return events


def write_workload(path: str | os.PathLike, events: Iterable[WorkloadEvent]) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.to_line() + "\n")


def read_workload(path: str | os.PathLike) -> list[WorkloadEvent]:
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(WorkloadEvent.from_line(line))
            except (ValueError, IndexError):
                raise ParseError(str(path), lineno, line.strip()) from None
    return events


def apply_event(graph: DynGraph, event: WorkloadEvent) -> None:
    if event.kind is EventKind.INSERT:
        graph.insert_edge(event.u, event.v)
    elif event.kind is EventKind.DELETE:
        graph.delete_edge(event.u, event.v)
