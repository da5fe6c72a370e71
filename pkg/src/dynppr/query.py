"""Approximate single-source and top-k PPR over the walk index."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .dyngraph import DynGraph
from .errors import IndexUnderflow
from .fpush import PushParams, forward_push
from .walk_store import WalkIndex, walk_budget


@dataclass(frozen=True)
class ApproxParams:
    """Accuracy target plus the push/walk balance ``r_max * omega = beta / alpha``."""

    epsilon: float = 0.5
    delta: float = 1e-4
    p_f: float = 1e-4
    alpha: float = 0.2
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if not 0.0 < self.p_f < 1.0:
            raise ValueError("p_f must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")

    @classmethod
    def for_graph(cls, n: int, **overrides) -> "ApproxParams":
        """Defaults with ``delta = p_f = 1/n``."""
        overrides.setdefault("delta", 1.0 / max(n, 1))
        overrides.setdefault("p_f", min(1.0 / max(n, 1), 0.5))
        return cls(**overrides)

    @property
    def omega(self) -> float:
        eps = self.epsilon
        return (2.0 * eps / 3.0 + 2.0) * math.log(2.0 / self.p_f) / (eps * eps * self.delta)

    @property
    def r_max_times_omega(self) -> float:
        return self.beta / self.alpha

    @property
    def r_max(self) -> float:
        return self.beta / (self.alpha * self.omega)

    def with_(self, **changes) -> "ApproxParams":
        return replace(self, **changes)


@dataclass
class SsppResult:
    estimates: dict[int, float]
    params: ApproxParams
    walks_consumed: int = 0

    def dense(self, n: int):
        import numpy as np

        out = np.zeros(n)
        for v, x in self.estimates.items():
            out[v] = x
        return out


@dataclass
class TopKResult:
    ranked: list[tuple[int, float]]
    rounds: int
    final_delta: float = 0.0
    walks_consumed: int = 0
    estimates: dict[int, float] = field(default_factory=dict, repr=False)


def _check_index(index: WalkIndex, params: ApproxParams) -> None:
    if abs(index.alpha - params.alpha) > 1e-12:
        raise ValueError(f"index built with alpha={index.alpha}, query uses {params.alpha}")
    if index.r_max_times_omega + 1e-9 < params.r_max_times_omega:
        raise ValueError("index holds fewer walks per degree than the query needs")


def query_sspr(graph: DynGraph, index: WalkIndex, s: int, params: ApproxParams) -> SsppResult:
    """Forward-Push, then refine every residue with stored walks.

    Node ``v`` with residue ``r`` consumes the ``ceil(r * omega)`` lowest-id
    walks of ``H(v)``; each adds ``r / n_v`` at its terminal.  No randomness
    is drawn, so repeated queries on the same index agree exactly.
    """
    _check_index(index, params)
    omega = params.omega
    push = forward_push(graph, s, PushParams(params.alpha, params.r_max))
    est = push.reserve
    paths = index.paths
    used = 0
    for v, r in push.residue.items():
        n_v = max(1, walk_budget(r * omega))
        ids = index.by_source[v]
        if n_v > len(ids):
            raise IndexUnderflow(f"node {v} needs {n_v} walks, index holds {len(ids)}")
        share = r / n_v
        for wid in ids[:n_v]:
            t = paths[wid][-1]
            est[t] = est.get(t, 0.0) + share
        used += n_v
    return SsppResult(est, params, used)


def rank(estimates: dict[int, float], k: int, n: int) -> list[tuple[int, float]]:
    """Top ``k`` by score (ties by node id), padded with zero-score nodes."""
    top = heapq.nsmallest(k, estimates.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(top) < k:
        seen = {v for v, _ in top}
        for v in range(n):
            if len(top) == k:
                break
            if v not in seen:
                top.append((v, 0.0))
    return top


def topk_rounds(
    n: int,
    k: int,
    params: ApproxParams,
    estimate: Callable[[ApproxParams], SsppResult],
) -> TopKResult:
    """Coarse-to-fine top-k around any single-source estimator.

    Round ``i`` answers at threshold ``max(delta, 2**-i)`` with failure budget
    ``p_f / ceil(log2(1/delta))``; it stops once the k-th lower bound
    ``estimate / (1 + epsilon)`` clears the round threshold, or at ``delta``.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    budget = max(1, math.ceil(math.log2(1.0 / params.delta) - 1e-12))
    p_round = params.p_f / budget
    i = used = 0
    while True:
        i += 1
        delta_i = max(params.delta, 2.0 ** -i)
        res = estimate(params.with_(delta=delta_i, p_f=p_round))
        used += res.walks_consumed
        ranked = rank(res.estimates, k, n)
        if delta_i <= params.delta or ranked[-1][1] / (1.0 + params.epsilon) >= delta_i:
            return TopKResult(ranked, i, delta_i, used, res.estimates)


def query_topk(graph: DynGraph, index: WalkIndex, s: int, k: int, params: ApproxParams) -> TopKResult:
    """Top-k by repeated :func:`query_sspr` at shrinking thresholds."""
    return topk_rounds(graph.n, k, params, lambda p: query_sspr(graph, index, s, p))
