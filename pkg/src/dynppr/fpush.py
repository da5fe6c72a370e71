"""Forward-Push local solver.

Maintains a reserve and a residue map for one source; every push settles an
``alpha`` share of a node's residue and spreads the rest evenly over its
out-neighbours.  A dangling node keeps its whole residue (its walk can only
self-loop until it stops), so a push there settles everything.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .dyngraph import DynGraph


@dataclass(frozen=True)
class PushParams:
    alpha: float
    r_max: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.r_max > 0.0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")


@dataclass
class PushResult:
    reserve: dict[int, float] = field(default_factory=dict)
    residue: dict[int, float] = field(default_factory=dict)
    pushes: int = 0

    def mass(self) -> float:
        return sum(self.reserve.values()) + sum(self.residue.values())


def forward_push(
    graph: DynGraph,
    s: int,
    params: PushParams,
    *,
    lifo: bool = False,
    on_push: Callable[[int, PushResult], None] | None = None,
) -> PushResult:
    """Push from ``s`` until every node satisfies ``r(u) < r_max * d(u)``.

    ``on_push(u, state)`` is called after each push with the live state;
    tests use it to check the reserve/residue invariant mid-run.
    """
    if not 0 <= s < graph.n:
        raise IndexError(f"source {s} outside 0..{graph.n - 1}")
    alpha, r_max = params.alpha, params.r_max
    adj = graph.out_adj
    state = PushResult(residue={s: 1.0})
    reserve, residue = state.reserve, state.residue

    queue: deque[int] = deque()
    queued: set[int] = set()
    if 1.0 >= r_max * len(adj[s]):
        queue.append(s)
        queued.add(s)
    pop = queue.pop if lifo else queue.popleft

    while queue:
        u = pop()
        queued.discard(u)
        ru = residue.pop(u)
        nbrs = adj[u]
        d = len(nbrs)
        state.pushes += 1
        if d == 0:
            reserve[u] = reserve.get(u, 0.0) + ru
        else:
            reserve[u] = reserve.get(u, 0.0) + alpha * ru
            inc = (1.0 - alpha) * ru / d
            for v in nbrs:
                rv = residue.get(v, 0.0) + inc
                residue[v] = rv
                if v not in queued and rv >= r_max * len(adj[v]):
                    queue.append(v)
                    queued.add(v)
        if on_push is not None:
            on_push(u, state)
    return state
