"""Benchmark harness: ingest an edge list, build the index, replay workloads.

Subcommands::

    gen-workload  write a random-arrival workload for a dataset split
    run           replay a workload against one engine, emit per-event CSV
    accuracy      apply updates, then compare estimates with power iteration
    audit         build (or restore) an index, replay updates, check invariants
    snapshot      build the index for a split and save it
    restore       load a snapshot and audit it

The dataset split, workload, index and query streams are derived from one
``--seed``, so ``gen-workload`` and ``run`` agree on the initial graph.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dyngraph import (
    DynGraph,
    EventKind,
    GraphPool,
    WorkloadEvent,
    apply_event,
    gen_workload,
    read_edge_list,
    read_workload,
    split_edges,
    write_workload,
)
from .errors import DynPPRError, RefusesLargeGraph
from .oracle import MAX_ORACLE_NODES, fora_index_free, power_iteration, rebuild_baseline_update, transition_matrix
from .query import ApproxParams, SsppResult, query_sspr, topk_rounds
from .rng import Rng
from .walk_store import WalkIndex, audit, build_index, load_snapshot, save_snapshot

ENGINES = ("firm", "rebuild", "indexfree")


@dataclass
class RunConfig:
    dataset: str
    directed: bool = True
    split: float = 0.9
    alpha: float = 0.2
    epsilon: float = 0.5
    delta: float | None = None  # None means 1/n
    p_f: float | None = None  # None means 1/n
    beta: float = 1.0
    seed: int = 0
    update_pct: float = 50.0
    count: int = 100
    k: int = 500
    insert_prob: float = 0.5
    engine: str = "firm"
    out: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.split <= 1.0:
            raise ValueError("split must lie in [0, 1]")
        if not 0.0 <= self.update_pct <= 100.0:
            raise ValueError("update-pct must lie in [0, 100]")
        if not 0.0 <= self.insert_prob <= 1.0:
            raise ValueError("insert-prob must lie in [0, 1]")
        if self.count < 0 or self.k < 0:
            raise ValueError("count and k must be non-negative")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {', '.join(ENGINES)}")

    def params(self, n: int) -> ApproxParams:
        """Accuracy parameters with ``delta`` and ``p_f`` resolved against ``n``."""
        fixed = {"epsilon": self.epsilon, "alpha": self.alpha, "beta": self.beta}
        if self.delta is not None:
            fixed["delta"] = self.delta
        if self.p_f is not None:
            fixed["p_f"] = self.p_f
        return ApproxParams.for_graph(n, **fixed)

    def streams(self) -> dict[str, Rng]:
        split, workload, index, query = Rng(self.seed).spawn(4)
        return {"split": split, "workload": workload, "index": index, "query": query}


@dataclass
class MetricsRow:
    event: int
    kind: str
    latency_ns: int
    touched_walks: int | None = None
    walks_consumed: int | None = None


def load_pool(config: RunConfig, rng: Rng) -> GraphPool:
    el = read_edge_list(config.dataset, config.directed)
    return split_edges(el.n, el.edges, config.split, rng)


# ---------------------------------------------------------------------------
# engines


class Engine:
    """One way of keeping PPR answerable while the graph changes."""

    name = ""

    def __init__(self, graph: DynGraph, params: ApproxParams, rng: Rng) -> None:
        self.graph = graph
        self.params = params
        self.rng = rng
        self.index: WalkIndex | None = None

    def update(self, event: WorkloadEvent) -> int:
        raise NotImplementedError

    def sspr(self, s: int, params: ApproxParams) -> SsppResult:
        raise NotImplementedError

    def topk(self, s: int, k: int):
        return topk_rounds(self.graph.n, min(k, self.graph.n), self.params, lambda p: self.sspr(s, p))


class FirmEngine(Engine):
    name = "firm"

    def __init__(self, graph, params, rng, index: WalkIndex | None = None) -> None:
        super().__init__(graph, params, rng)
        if index is None:
            index = build_index(graph, params.alpha, params.r_max_times_omega, rng)
        self.index = index

    def update(self, event):
        apply_event(self.graph, event)
        if event.kind is EventKind.INSERT:
            return self.index.update_insert(event.u, event.v, self.rng).touched
        return self.index.update_delete(event.u, event.v, self.rng).touched

    def sspr(self, s, params):
        return query_sspr(self.graph, self.index, s, params)


class RebuildEngine(FirmEngine):
    name = "rebuild"

    def update(self, event):
        # every walk is regenerated, so all of them count as touched
        kind = event.kind.value
        self.index = rebuild_baseline_update(
            self.graph, (event.u, event.v), kind, self.params.alpha, self.params.r_max_times_omega, self.rng
        )
        return len(self.index)


class IndexFreeEngine(Engine):
    name = "indexfree"

    def update(self, event):
        apply_event(self.graph, event)
        return 0

    def sspr(self, s, params):
        return fora_index_free(self.graph, s, params, self.rng)


def make_engine(name: str, graph: DynGraph, params: ApproxParams, rng: Rng, index: WalkIndex | None = None) -> Engine:
    if name == "firm":
        return FirmEngine(graph, params, rng, index)
    if name == "rebuild":
        return RebuildEngine(graph, params, rng, index)
    if name == "indexfree":
        return IndexFreeEngine(graph, params, rng)
    raise ValueError(f"unknown engine {name!r}")


def replay(engine: Engine, events: Sequence[WorkloadEvent]) -> list[MetricsRow]:
    """Run events in order; latency covers only the engine call."""
    rows = []
    clock = time.perf_counter_ns
    for i, ev in enumerate(events):
        if ev.is_update:
            t0 = clock()
            touched = engine.update(ev)
            rows.append(MetricsRow(i, ev.kind.value, clock() - t0, touched_walks=touched))
        elif ev.kind is EventKind.TOPK:
            t0 = clock()
            res = engine.topk(ev.u, ev.k)
            rows.append(MetricsRow(i, ev.kind.value, clock() - t0, walks_consumed=res.walks_consumed))
        else:
            t0 = clock()
            res = engine.sspr(ev.u, engine.params)
            rows.append(MetricsRow(i, ev.kind.value, clock() - t0, walks_consumed=res.walks_consumed))
    return rows


def summarize(rows: Sequence[MetricsRow]) -> dict:
    updates = [r for r in rows if r.touched_walks is not None]
    queries = [r for r in rows if r.touched_walks is None]

    def mean(xs):
        return float(np.mean(xs)) if xs else None

    return {
        "events": len(rows),
        "updates": len(updates),
        "queries": len(queries),
        "mean_update_ns": mean([r.latency_ns for r in updates]),
        "mean_query_ns": mean([r.latency_ns for r in queries]),
        "mean_touched_walks": mean([r.touched_walks for r in updates]),
    }


def write_rows(path: str | Path, rows: Sequence[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event", "kind", "latency_ns", "touched_walks", "walks_consumed"])
        for r in rows:
            w.writerow([r.event, r.kind, r.latency_ns, _blank(r.touched_walks), _blank(r.walks_consumed)])


def _blank(x) -> object:
    return "" if x is None else x


# ---------------------------------------------------------------------------
# accuracy


@dataclass
class AccuracyRow:
    source: int
    avg_rel_err: float
    max_rel_err: float


def relative_errors(estimate: np.ndarray, truth: np.ndarray, delta: float) -> np.ndarray:
    """``|est - pi| / pi`` over the nodes with ``pi >= delta``."""
    mask = truth >= delta
    return np.abs(estimate[mask] - truth[mask]) / truth[mask]


def accuracy_rows(
    engine: Engine,
    sources: Sequence[int],
    rounds: int = 160,
) -> list[AccuracyRow]:
    graph = engine.graph
    if graph.n > MAX_ORACLE_NODES:
        raise RefusesLargeGraph(f"oracle limited to {MAX_ORACLE_NODES} nodes, graph has {graph.n}")
    matrix = transition_matrix(graph)
    delta = engine.params.delta
    rows = []
    for s in sources:
        truth = power_iteration(graph, s, engine.params.alpha, rounds, matrix=matrix).values
        est = engine.sspr(s, engine.params).dense(graph.n)
        err = relative_errors(est, truth, delta)
        rows.append(AccuracyRow(s, float(err.mean()) if len(err) else 0.0, float(err.max()) if len(err) else 0.0))
    return rows


# ---------------------------------------------------------------------------
# commands


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset=args.dataset,
        directed=args.directed,
        split=args.split,
        alpha=args.alpha,
        epsilon=args.epsilon,
        delta=args.delta,
        p_f=args.p_f,
        beta=args.beta,
        seed=args.seed,
        update_pct=args.update_pct,
        count=args.count,
        k=args.k,
        insert_prob=args.insert_prob,
        engine=args.engine,
        out=args.out,
    )


def _workload(config: RunConfig, pool: GraphPool, rng: Rng, path: str | None) -> list[WorkloadEvent]:
    if path:
        return read_workload(path)
    return gen_workload(pool, config.update_pct, config.count, rng=rng, insert_prob=config.insert_prob, k=config.k or None)


def cmd_gen_workload(args: argparse.Namespace) -> int:
    config = _config(args)
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    events = gen_workload(
        pool, config.update_pct, config.count, rng=streams["workload"], insert_prob=config.insert_prob, k=config.k or None
    )
    if config.out:
        write_workload(config.out, events)
    else:
        sys.stdout.writelines(ev.to_line() + "\n" for ev in events)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _config(args)
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    events = _workload(config, pool, streams["workload"], args.workload)
    params = config.params(pool.graph.n)
    engine = make_engine(config.engine, pool.graph, params, streams["index"])
    rows = replay(engine, events)
    summary = summarize(rows)
    summary["engine"] = config.engine
    violations = audit(engine.graph, engine.index) if engine.index is not None else []
    violations += engine.graph.audit()
    summary["violations"] = len(violations)
    if config.out:
        write_rows(config.out, rows)
        Path(config.out).with_suffix(".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    for v in violations:
        print(v, file=sys.stderr)
    return 0 if not violations else 1


def cmd_accuracy(args: argparse.Namespace) -> int:
    config = _config(args)
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    if pool.graph.n > MAX_ORACLE_NODES:
        raise RefusesLargeGraph(f"oracle limited to {MAX_ORACLE_NODES} nodes, graph has {pool.graph.n}")
    events = gen_workload(pool, 100.0, config.count, rng=streams["workload"], insert_prob=config.insert_prob)
    params = config.params(pool.graph.n)
    engine = make_engine(config.engine, pool.graph, params, streams["index"])
    for ev in events:
        engine.update(ev)
    qrng = streams["query"]
    sources = [qrng.randbelow(engine.graph.n) for _ in range(args.sources)]
    rows = accuracy_rows(engine, sources)
    out = open(config.out, "w", newline="") if config.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["source", "avg_rel_err", "max_rel_err"])
        for r in rows:
            w.writerow([r.source, f"{r.avg_rel_err:.6g}", f"{r.max_rel_err:.6g}"])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    config = _config(args)
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    params = config.params(pool.graph.n)
    graph = pool.graph
    if args.snapshot:
        index = load_snapshot(graph, args.snapshot)
    else:
        index = build_index(graph, params.alpha, params.r_max_times_omega, streams["index"])
    engine = FirmEngine(graph, params, streams["index"], index)
    events = _workload(config, pool, streams["workload"], args.workload)
    violations: list[str] = []
    updates = 0
    for ev in events:
        if not ev.is_update:
            continue
        engine.update(ev)
        updates += 1
        if args.every and updates % args.every == 0:
            violations += audit(graph, index)
    violations += audit(graph, index) + graph.audit()
    for v in violations:
        print(v)
    print(f"{updates} updates replayed, {len(index)} walks, {index.total_records()} records, {len(violations)} violations")
    return 0 if not violations else 1


def cmd_snapshot(args: argparse.Namespace) -> int:
    config = _config(args)
    if not config.out:
        raise ValueError("snapshot needs --out")
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    params = config.params(pool.graph.n)
    index = build_index(pool.graph, params.alpha, params.r_max_times_omega, streams["index"])
    save_snapshot(index, config.out)
    print(f"wrote {len(index)} walks for n={pool.graph.n}, m={pool.graph.m} to {config.out}")
    return 0


def cmd_restore(args: argparse.Namespace) -> int:
    config = _config(args)
    streams = config.streams()
    pool = load_pool(config, streams["split"])
    index = load_snapshot(pool.graph, args.snapshot)
    violations = audit(pool.graph, index)
    for v in violations:
        print(v)
    print(f"restored {len(index)} walks, {index.total_records()} records, {len(violations)} violations")
    return 0 if not violations else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynppr", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("dataset", help="edge list, one 'u v' pair per line")
    common.add_argument("--directed", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--split", type=float, default=0.9, help="fraction of edges in the initial graph")
    common.add_argument("--alpha", type=float, default=0.2)
    common.add_argument("--epsilon", type=float, default=0.5)
    common.add_argument("--delta", type=float, default=None, help="default 1/n")
    common.add_argument("--p-f", dest="p_f", type=float, default=None, help="default 1/n")
    common.add_argument("--beta", type=float, default=1.0, help="r_max * omega = beta / alpha")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--update-pct", type=float, default=50.0)
    common.add_argument("--count", type=int, default=100)
    common.add_argument("--k", type=int, default=500, help="top-k size for queries; 0 for full queries")
    common.add_argument("--insert-prob", type=float, default=0.5, help="share of updates that insert")
    common.add_argument("--engine", choices=ENGINES, default="firm")
    common.add_argument("--out", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-workload", parents=[common], help="write a workload file")
    p.set_defaults(func=cmd_gen_workload)
    p = sub.add_parser("run", parents=[common], help="replay a workload and record latencies")
    p.add_argument("--workload", default=None, help="workload file (generated from the seed if omitted)")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("accuracy", parents=[common], help="relative error against power iteration")
    p.add_argument("--sources", type=int, default=50)
    p.set_defaults(func=cmd_accuracy)
    p = sub.add_parser("audit", parents=[common], help="check index invariants after updates")
    p.add_argument("--workload", default=None)
    p.add_argument("--snapshot", default=None, help="start from a saved index instead of building one")
    p.add_argument("--every", type=int, default=0, help="also audit after every N updates")
    p.set_defaults(func=cmd_audit)
    p = sub.add_parser("snapshot", parents=[common], help="build the index and save it to --out")
    p.set_defaults(func=cmd_snapshot)
    p = sub.add_parser("restore", parents=[common], help="load a snapshot and audit it")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_restore)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DynPPRError, OSError, ValueError) as exc:
        print(f"dynppr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
