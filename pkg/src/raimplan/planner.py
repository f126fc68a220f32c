"""Candidate route enumeration, cost evaluation, and optimal selection.

The objective is the sum over route nodes of incoming-segment length times
node HPL; a route is feasible when its faulty-node ratio stays at or below
the configured maximum and every node HPL stays within the horizontal alert
limit.  Selection is the minimal-cost feasible candidate with deterministic
tie-breaking (total distance, then node sequence).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import networkx as nx

from .integrity import IntegrityParams, NodeIntegrityResult, evaluate_node
from .pseudorange import SignalConfig
from .world import NodeSchedule, RoadGraph, SceneModel, distance3, schedule_nodes

# Table-default vehicle speed, 40 km/h
DEFAULT_SPEED_MPS = 40.0 / 3.6
DEFAULT_NODE_SPACING_M = 25.0

# Relative margin when deciding that a generated path is strictly longer than
# the current K-th shortest (captures float-tied lengths).
_LENGTH_TIE_MARGIN = 1e-9


class NoRouteError(ValueError):
    """The road graph has no path between the requested endpoints."""


@dataclass(frozen=True)
class CandidatePath:
    """A loopless node sequence with per-segment lengths.

    segment_lengths_m[k] is the length of the edge arriving at nodes[k+1];
    via holds the coarse graph-level sequence when nodes has been densified.
    """

    name: str
    nodes: tuple[str, ...]
    segment_lengths_m: tuple[float, ...]
    via: tuple[str, ...] = ()

    @property
    def total_length_m(self) -> float:
        return sum(self.segment_lengths_m)


@dataclass(frozen=True)
class PathEvaluation:
    candidate: CandidatePath
    cost: float  # meter^2: sum of segment length * node HPL
    fault_ratio: float
    max_hpl_m: float
    avg_hpl_m: float
    total_distance_m: float
    feasible: bool

    @property
    def name(self) -> str:
        return self.candidate.name


@dataclass
class PlanResult:
    chosen: PathEvaluation | None
    evaluations: list[PathEvaluation]


@dataclass
class PlanOutcome:
    """Everything a planning run produced, keyed by candidate name."""

    result: PlanResult
    candidates: dict[str, CandidatePath]
    schedules: dict[str, NodeSchedule]
    node_results: dict[str, list[NodeIntegrityResult]]


def _path_from_nodes(
    graph: RoadGraph, name: str, nodes: tuple[str, ...]
) -> CandidatePath:
    lengths = tuple(
        graph.edge_length(a, b) for a, b in zip(nodes, nodes[1:])
    )
    return CandidatePath(name=name, nodes=nodes, segment_lengths_m=lengths)


def enumerate_candidates(
    graph: RoadGraph,
    start: str,
    goal: str,
    k: int = 10,
    named_routes: dict[str, list[str]] | None = None,
    include_generated: bool = True,
) -> list[CandidatePath]:
    """K shortest loopless paths plus any matching named routes.

    Output is sorted by (total length, node sequence); generated paths are
    named k01, k02, ... in that order.  Named routes whose endpoints are not
    (start, goal) are ignored; a generated duplicate of a named route keeps
    the route's name.  With include_generated off only named routes are used.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if start not in graph.nodes or goal not in graph.nodes:
        raise NoRouteError(f"unknown endpoint {start!r} or {goal!r}")

    named: dict[tuple[str, ...], str] = {}
    if named_routes:
        for route_name in sorted(named_routes):
            seq = tuple(named_routes[route_name])
            if seq[0] == start and seq[-1] == goal:
                named.setdefault(seq, route_name)

    generated: list[tuple[str, ...]] = []
    if include_generated:
        if start == goal:
            generated = [(start,)]
        else:
            g = graph.to_networkx()
            try:
                gen = nx.shortest_simple_paths(g, start, goal, weight="weight")
                collected: list[tuple[float, tuple[str, ...]]] = []
                for nodes in gen:
                    tup = tuple(nodes)
                    length = sum(
                        graph.edge_length(a, b) for a, b in zip(tup, tup[1:])
                    )
                    if len(collected) >= k:
                        kth = sorted(row[0] for row in collected)[k - 1]
                        if length > kth * (1.0 + _LENGTH_TIE_MARGIN):
                            break
                    collected.append((length, tup))
            except nx.NetworkXNoPath as exc:
                raise NoRouteError(f"no path from {start!r} to {goal!r}") from exc
            collected.sort(key=lambda row: (row[0], row[1]))
            generated = [row[1] for row in collected[:k]]
    elif not named:
        raise NoRouteError(
            f"no named route runs from {start!r} to {goal!r}"
        )

    paths = dict(named.items())
    counter = 0
    for seq in generated:
        if seq not in paths:
            counter += 1
            paths[seq] = f"k{counter:02d}"
    out = [_path_from_nodes(graph, name, seq) for seq, name in paths.items()]
    out.sort(key=lambda p: (p.total_length_m, p.nodes))
    return out


def evaluate_path(
    path: CandidatePath,
    node_results: dict[str, NodeIntegrityResult],
    params: IntegrityParams,
) -> PathEvaluation:
    """Cost, fault ratio, and feasibility of one candidate.

    The start node has no incoming segment so it adds no cost term, but it
    counts in the node total for the fault ratio and the HPL statistics.
    """
    missing = [n for n in path.nodes if n not in node_results]
    if missing:
        raise ValueError(f"missing node results for {missing}")
    hpls = [node_results[n].hpl_m for n in path.nodes]
    n_fault = sum(1 for n in path.nodes if node_results[n].fault)
    cost = sum(
        d * h for d, h in zip(path.segment_lengths_m, hpls[1:])
    )
    fault_ratio = n_fault / len(path.nodes)
    max_hpl = max(hpls)
    avg_hpl = sum(hpls) / len(hpls)
    feasible = fault_ratio <= params.max_fault_ratio and max_hpl <= params.hal_m
    return PathEvaluation(
        candidate=path,
        cost=cost,
        fault_ratio=fault_ratio,
        max_hpl_m=max_hpl,
        avg_hpl_m=avg_hpl,
        total_distance_m=path.total_length_m,
        feasible=feasible,
    )


def select_optimal(evaluations: list[PathEvaluation]) -> PlanResult:
    """Minimal-cost feasible candidate; ties by distance then node sequence."""
    if not evaluations:
        raise ValueError("no candidates evaluated")
    feasible = [e for e in evaluations if e.feasible]
    chosen = (
        min(feasible, key=lambda e: (e.cost, e.total_distance_m, e.candidate.nodes))
        if feasible
        else None
    )
    return PlanResult(chosen=chosen, evaluations=list(evaluations))


def _densify(
    cand: CandidatePath, schedule: NodeSchedule
) -> CandidatePath:
    entries = schedule.entries
    dists = tuple(
        distance3(a.position, b.position)
        for a, b in zip(entries, entries[1:])
    )
    return CandidatePath(
        name=cand.name,
        nodes=tuple(schedule.node_ids),
        segment_lengths_m=dists,
        via=cand.nodes,
    )


def plan(
    scene: SceneModel,
    start: str,
    goal: str,
    k: int = 10,
    params: IntegrityParams | None = None,
    signal: SignalConfig | None = None,
    speed_mps: float = DEFAULT_SPEED_MPS,
    spacing_m: float | None = DEFAULT_NODE_SPACING_M,
    start_epoch: float = 0.0,
    jobs: int = 1,
    candidate_mode: str = "k_shortest",
) -> PlanOutcome:
    """End-to-end planning: candidates, schedules, node integrity, selection.

    Each candidate is driven at constant speed from a common start epoch, its
    node grid densified to spacing_m, every grid node evaluated for fault and
    HPL, and the aggregate compared under the planning objective.  With
    jobs > 1 node evaluations run in a thread pool; results are keyed by
    (candidate, node) so concurrency cannot reorder anything.
    """
    params = params if params is not None else IntegrityParams()
    signal = signal if signal is not None else SignalConfig()
    candidates = enumerate_candidates(
        scene.graph,
        start,
        goal,
        k,
        scene.routes,
        include_generated=candidate_mode != "named",
    )
    schedules: dict[str, NodeSchedule] = {}
    dense: dict[str, CandidatePath] = {}
    for cand in candidates:
        sched = schedule_nodes(
            scene.graph, list(cand.nodes), speed_mps, start_epoch, spacing_m
        )
        schedules[cand.name] = sched
        dense[cand.name] = _densify(cand, sched)

    tasks = [
        (cand.name, idx, entry)
        for cand in candidates
        for idx, entry in enumerate(schedules[cand.name].entries)
    ]
    results: dict[str, list[NodeIntegrityResult | None]] = {
        cand.name: [None] * len(schedules[cand.name].entries) for cand in candidates
    }
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(evaluate_node, entry, scene, params, signal): (name, idx)
                for name, idx, entry in tasks
            }
            for fut, (name, idx) in futures.items():
                results[name][idx] = fut.result()
    else:
        for name, idx, entry in tasks:
            results[name][idx] = evaluate_node(entry, scene, params, signal)

    node_results = {name: list(rows) for name, rows in results.items()}
    evaluations = []
    for cand in candidates:
        by_id = {r.node_id: r for r in node_results[cand.name]}
        evaluations.append(evaluate_path(dense[cand.name], by_id, params))
    result = select_optimal(evaluations)
    return PlanOutcome(
        result=result,
        candidates={c.name: c for c in candidates},
        schedules=schedules,
        node_results=node_results,
    )
