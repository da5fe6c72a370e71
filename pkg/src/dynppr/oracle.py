"""Ground truth and baselines.

Dense power iteration and per-hop PPR serve as oracles for tests; the
index-free estimator and the rebuild-per-update path are the latency
baselines the incremental index is compared against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dyngraph import DynGraph
from .errors import RefusesLargeGraph
from .fpush import PushParams, forward_push
from .rng import Rng, ScriptedRng
from .walk_store import WalkIndex, build_index

MAX_ORACLE_NODES = 100_000


@dataclass
class PprVector:
    values: np.ndarray
    source: int
    rounds: int


def _require_small(graph: DynGraph) -> None:
    if graph.n > MAX_ORACLE_NODES:
        raise RefusesLargeGraph(f"oracle limited to {MAX_ORACLE_NODES} nodes, graph has {graph.n}")


def transition_matrix(graph: DynGraph) -> sp.csr_matrix:
    """Row-stochastic walk matrix; dangling rows carry a self-loop."""
    _require_small(graph)
    rows, cols, vals = [], [], []
    for u, adj in enumerate(graph.out_adj):
        if adj:
            w = 1.0 / len(adj)
            rows.extend([u] * len(adj))
            cols.extend(adj)
            vals.extend([w] * len(adj))
        else:
            rows.append(u)
            cols.append(u)
            vals.append(1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(graph.n, graph.n))


def power_iteration(
    graph: DynGraph,
    s: int,
    alpha: float,
    rounds: int = 160,
    *,
    matrix: sp.csr_matrix | None = None,
) -> PprVector:
    """``rounds`` steps of ``pi <- alpha*e_s + (1-alpha)*pi*P`` from ``pi = e_s``.

    The iterate always sums to one; its distance to the fixed point is at
    most ``(1-alpha)**rounds`` in L1.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    pt = (matrix if matrix is not None else transition_matrix(graph)).T.tocsr()
    e = np.zeros(graph.n)
    e[s] = 1.0
    pi = e.copy()
    for _ in range(rounds):
        pi = alpha * e + (1.0 - alpha) * (pt @ pi)
    return PprVector(pi, s, rounds)


def ppr_matrix(graph: DynGraph, alpha: float, rounds: int = 160) -> np.ndarray:
    """All-pairs PPR by power iteration; row ``v`` is ``pi(v, .)``."""
    p = transition_matrix(graph).toarray()
    eye = np.eye(graph.n)
    pi = eye.copy()
    for _ in range(rounds):
        pi = alpha * eye + (1.0 - alpha) * (pi @ p)
    return pi


def hop_ppr(graph: DynGraph, s: int, alpha: float, max_hops: int) -> np.ndarray:
    """Row ``l`` is the probability of stopping at each node after exactly ``l`` hops."""
    if max_hops < 0:
        raise ValueError("max_hops must be >= 0")
    pt = transition_matrix(graph).T.tocsr()
    out = np.zeros((max_hops + 1, graph.n))
    x = np.zeros(graph.n)
    x[s] = 1.0
    scale = alpha
    for hop in range(max_hops + 1):
        out[hop] = scale * x
        x = pt @ x
        scale *= 1.0 - alpha
    return out


def conditioned_terminal_distribution(graph: DynGraph, s: int, alpha: float, max_hops: int = 400) -> np.ndarray:
    """Terminal law of a walk from ``s`` given it takes at least one hop."""
    hops = hop_ppr(graph, s, alpha, max_hops)
    return hops[1:].sum(axis=0) / (1.0 - alpha)


# ---------------------------------------------------------------------------
# baselines


def fora_index_free(graph: DynGraph, s: int, params, rng: Rng | ScriptedRng):
    """Forward-Push, then fresh walks from every residue node."""
    from .query import SsppResult

    push = forward_push(graph, s, PushParams(params.alpha, params.r_max))
    est = dict(push.reserve)
    omega, alpha = params.omega, params.alpha
    adj = graph.out_adj
    used = 0
    for v, r in push.residue.items():
        n_v = math.ceil(r * omega)
        if n_v <= 0:
            continue
        share = r / n_v
        used += n_v
        for _ in range(n_v):
            cur = v
            while rng.random() >= alpha:
                nbrs = adj[cur]
                if nbrs:
                    cur = nbrs[rng.randbelow(len(nbrs))]
            est[cur] = est.get(cur, 0.0) + share
    return SsppResult(est, params, used)


def rebuild_baseline_update(
    graph: DynGraph,
    e: tuple[int, int],
    kind: str,
    alpha: float,
    r_max_times_omega: float,
    rng: Rng | ScriptedRng,
) -> WalkIndex:
    """Apply the edge update, then rebuild the whole index from scratch."""
    u, v = e
    if kind in ("insert", "I"):
        graph.insert_edge(u, v)
    elif kind in ("delete", "D"):
        graph.delete_edge(u, v)
    else:
        raise ValueError(f"unknown update kind {kind!r}")
    return build_index(graph, alpha, r_max_times_omega, rng)
