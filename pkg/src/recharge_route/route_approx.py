"""Approximation algorithm: segment cover -> neighbor sets -> recharge-hop TSP
-> per-set spanning-tree traversal."""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from .core import (DepotGraph, DisjointSet, Walk, build_depot_graph, collapse,
                   component_feasibility, kruskal, make_report, trim_walk, walk_cost)
from .errors import InfeasibleError, ValidationError
from .instance import Instance, metric_completion
from .segment_cover import CYCLE, Segment, min_segment_cover

log = logging.getLogger(__name__)

EXACT_MATCHING_LIMIT = 16


@dataclass(frozen=True)
class NeighborSet:
    index: int
    segments: tuple  # indices into the segment list
    depots: tuple  # sorted anchor depots

    @property
    def representative(self) -> int:
        return self.segments[0]


@dataclass(frozen=True)
class SegmentGraph:
    weights: tuple  # weights[i][j] = fewest recharges between sets i and j
    links: dict  # links[(i, j)] = (depot of set i, depot of set j) realizing the weight

    @property
    def n(self) -> int:
        return len(self.weights)

    def edges(self) -> list:
        n = self.n
        return [(i, j, self.weights[i][j]) for i in range(n) for j in range(i + 1, n)]


def _anchors(seg: Segment) -> tuple:
    return tuple(sorted(set(seg.anchors)))


def group_neighbor_sets(segments: Sequence[Segment], depot_graph: DepotGraph) -> list:
    """Connected components of the neighbor relation (anchor depots at most 2 hops apart)."""
    dsu = DisjointSet(range(len(segments)))
    at_depot = defaultdict(list)
    for i, s in enumerate(segments):
        for q in _anchors(s):
            at_depot[q].append(i)
    used = sorted(at_depot)
    for q in used:
        first = at_depot[q][0]
        for i in at_depot[q][1:]:
            dsu.union(first, i)
    for a_pos, a in enumerate(used):
        for b in used[a_pos + 1:]:
            if depot_graph.hop_dist(a, b) <= 2:
                dsu.union(at_depot[a][0], at_depot[b][0])
    groups = defaultdict(list)
    for i in range(len(segments)):
        groups[dsu.find(i)].append(i)
    out = []
    for k, members in enumerate(sorted(groups.values())):
        depots = sorted({q for i in members for q in _anchors(segments[i])})
        out.append(NeighborSet(k, tuple(members), tuple(depots)))
    return out


def build_segment_graph(neighbor_sets: Sequence[NeighborSet], depot_graph: DepotGraph,
                        instance: Optional[Instance] = None) -> SegmentGraph:
    """Complete graph on neighbor sets weighted by the fewest depot hops between them."""
    n = len(neighbor_sets)
    if n == 0:
        raise ValidationError("no neighbor sets")
    W = [[0] * n for _ in range(n)]
    links = {}
    for i in range(n):
        for j in range(i + 1, n):
            best = None
            for a in neighbor_sets[i].depots:
                for b in neighbor_sets[j].depots:
                    h = depot_graph.hop_dist(a, b)
                    length = instance.d[a][b] if instance is not None else 0.0
                    key = (h, length, a, b)
                    if best is None or key < best:
                        best = key
            if best[0] == float("inf"):
                raise ValidationError(f"neighbor sets {i} and {j} lie in different depot components")
            W[i][j] = W[j][i] = int(best[0])
            links[(i, j)] = (best[2], best[3])
            links[(j, i)] = (best[3], best[2])
    return SegmentGraph(tuple(tuple(r) for r in W), links)


# -- Christofides -------------------------------------------------------------

def tour_cost(weights, tour: Sequence[int]) -> float:
    if len(tour) < 2:
        return 0.0
    return float(sum(weights[a][b] for a, b in zip(tour, list(tour[1:]) + [tour[0]])))


def is_metric(weights, tol: float = 1e-9) -> bool:
    W = np.asarray(weights, dtype=float)
    if W.shape[0] != W.shape[1] or not np.allclose(W, W.T):
        return False
    slack = tol * max(1.0, float(W.max(initial=0.0)))
    for k in range(W.shape[0]):
        if np.any(W > W[:, k:k + 1] + W[k:k + 1, :] + slack):
            return False
    return True


def _exact_matching(nodes: list, w) -> list:
    n = len(nodes)

    @lru_cache(maxsize=None)
    def best(mask):
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        top = None
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            sub, pairs = best(rest & ~(1 << j))
            cand = sub + w[nodes[i]][nodes[j]]
            if top is None or cand < top[0]:
                top = (cand, ((nodes[i], nodes[j]),) + pairs)
        return top

    return list(best((1 << n) - 1)[1])


def _greedy_matching(nodes: list, w) -> list:
    pairs = sorted((w[a][b], a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:])
    taken, out = set(), []
    for _, a, b in pairs:
        if a not in taken and b not in taken:
            taken.update((a, b))
            out.append((a, b))
    return out


def christofides_tsp(weights, check_metric: bool = True,
                     exact_matching_limit: int = EXACT_MATCHING_LIMIT, info: Optional[dict] = None):
    """Hamiltonian tour (list of node indices starting at 0) on a complete metric graph."""
    W = weights.tolist() if isinstance(weights, np.ndarray) else [list(r) for r in weights]
    n = len(W)
    if n == 0:
        raise ValidationError("empty graph")
    if check_metric and not is_metric(W):
        raise ValidationError("christofides_tsp requires a metric weight matrix")
    if info is not None:
        info["matching"] = "none"
    if n <= 2:
        return list(range(n))
    tree = kruskal(range(n), lambda a, b: W[a][b])
    degree = [0] * n
    for _, a, b in tree:
        degree[a] += 1
        degree[b] += 1
    odd = [v for v in range(n) if degree[v] % 2]
    if len(odd) <= exact_matching_limit:
        matching = _exact_matching(odd, W)
        kind = "exact"
    else:
        matching = _greedy_matching(odd, W)
        kind = "greedy"
    if info is not None:
        info["matching"] = kind
    mg = nx.MultiGraph()
    mg.add_nodes_from(range(n))
    mg.add_edges_from((a, b) for _, a, b in tree)
    mg.add_edges_from(matching)
    tour, seen = [], set()
    for u, _ in nx.eulerian_circuit(mg, source=0):
        if u not in seen:
            seen.add(u)
            tour.append(u)
    return tour


def open_path_order(weights, tour: Sequence[int]) -> list:
    """Rotate a closed tour into an open path by dropping its heaviest edge."""
    k = len(tour)
    if k <= 2:
        return list(tour)
    heaviest = max(range(k), key=lambda i: (weights[tour[i]][tour[(i + 1) % k]], -i))
    return list(tour[heaviest + 1:]) + list(tour[:heaviest + 1])


# -- traversal of one neighbor set ---------------------------------------------

def traverse_neighbor_set(instance: Instance, depot_graph: DepotGraph, segments: Sequence[Segment],
                          neighbor_set: NeighborSet, entry_depot: int,
                          exit_depot: Optional[int] = None) -> list:
    """Sub-walk from ``entry_depot`` covering every segment of the set.

    Depots of the set are joined by a spanning tree under the hop metric and
    walked depth-first; a path segment doubles as the traversal of the tree
    edge between its two anchors when one exists, otherwise it is run as an
    out-and-back from the first anchor reached. Ends at ``exit_depot`` (or
    back at ``entry_depot``).
    """
    segs = [segments[i] for i in neighbor_set.segments]
    nodes_in_tree = set(neighbor_set.depots) | {entry_depot}
    if exit_depot is not None:
        nodes_in_tree.add(exit_depot)
    cycles_at = defaultdict(list)
    parallel = defaultdict(list)
    for s in segs:
        if s.kind == CYCLE:
            cycles_at[s.nodes[0]].append(s)
        else:
            parallel[tuple(sorted(s.ends))].append(s)

    d = instance.d
    tree = kruskal(
        nodes_in_tree, depot_graph.hop_dist,
        key=lambda w, u, v: (w, 0 if (u, v) in parallel else 1, d[u][v], u, v))
    adj = defaultdict(list)
    for _, a, b in tree:
        adj[a].append(b)
        adj[b].append(a)
    tree_pairs = {(a, b) for _, a, b in tree}

    exit_path = set()
    if exit_depot is not None:
        parent = {entry_depot: None}
        stack = [entry_depot]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in parent:
                    parent[w] = u
                    stack.append(w)
        v = exit_depot
        while v is not None:
            exit_path.add(v)
            v = parent[v]

    out = [entry_depot]

    def emit(seq):
        assert seq[0] == out[-1], (seq, out[-1])
        out.extend(seq[1:])

    def run_segment(s: Segment, start: int):
        emit(s.nodes if s.nodes[0] == start else s.nodes[::-1])

    def splice(u):
        for s in cycles_at.pop(u, ()):
            run_segment(s, u)
        for pair in sorted(parallel):
            if u in pair and pair not in tree_pairs:
                other = pair[0] if pair[1] == u else pair[1]
                for s in parallel.pop(pair):
                    run_segment(s, u)
                    emit(depot_graph.path(other, u))

    visited = set()

    def visit(u, on_exit_path):
        visited.add(u)
        splice(u)
        kids = sorted((c for c in adj[u] if c not in visited), key=lambda c: (c in exit_path, c))
        for c in kids:
            if c in visited:
                continue
            last = on_exit_path and c in exit_path
            pair = (min(u, c), max(u, c))
            par = parallel.get(pair, [])
            keep = 1 if last else 2
            while len(par) > keep:
                run_segment(par.pop(0), u)
                emit(depot_graph.path(c, u))
            if par:
                run_segment(par.pop(0), u)
            else:
                emit(depot_graph.path(u, c))
            visit(c, last)
            if not last:
                if par:
                    run_segment(par.pop(0), c)
                else:
                    emit(depot_graph.path(c, u))

    visit(entry_depot, exit_depot is not None)
    # anything left was anchored only at depots off the tree (cannot happen for
    # well-formed sets, kept as a guard)
    leftovers = [s for lst in cycles_at.values() for s in lst] + [
        s for lst in parallel.values() for s in lst]
    if leftovers:
        raise ValidationError(f"{len(leftovers)} segments unreachable from the spanning tree")
    return collapse(out)


def count_recharges(instance: Instance, nodes: Sequence[int]) -> int:
    return max(sum(1 for v in collapse(nodes) if instance.is_depot[v]) - 1, 0)


# -- end to end ------------------------------------------------------------------

def solve_component(instance: Instance, depot_graph: DepotGraph, component: Sequence[int]):
    """Approximation pipeline restricted to one coverable depot component."""
    segset = min_segment_cover(instance, component)
    segments = list(segset.segments)
    diag = {"component": list(component), "segments": [s.to_json() for s in segments]}
    if not segments:
        return [min(component)], diag
    nsets = group_neighbor_sets(segments, depot_graph)
    graph = build_segment_graph(nsets, depot_graph, instance)
    completed = metric_completion(np.array(graph.weights, dtype=float))
    info = {}
    tour = christofides_tsp(completed, info=info)
    order = open_path_order(completed, tour)

    pieces, per_set = [], []
    prev_exit = None
    for pos, k in enumerate(order):
        nset = nsets[k]
        if pos == 0:
            entry = nset.depots[0]
        else:
            entry = graph.links[(order[pos - 1], k)][1]
            pieces.append(depot_graph.path(prev_exit, entry))
        exit_ = graph.links[(k, order[pos + 1])][0] if pos + 1 < len(order) else None
        sub = traverse_neighbor_set(instance, depot_graph, segments, nset, entry, exit_)
        per_set.append({"set": k, "size": len(nset.segments),
                        "recharges": count_recharges(instance, sub)})
        pieces.append(sub)
        prev_exit = sub[-1]
    nodes = []
    for p in pieces:
        nodes.extend(p if not nodes else p[1:] if p[0] == nodes[-1] else p)
    diag.update({
        "neighbor_sets": [list(s.segments) for s in nsets],
        "gs_edges": [[i, j, w] for i, j, w in graph.edges()],
        "tsp_order": order,
        "matching": info.get("matching"),
        "per_set": per_set,
        "gs_metric_repaired": bool(np.any(completed < np.array(graph.weights, dtype=float))),
    })
    return trim_walk(instance, nodes), diag


def _infeasible(instance: Instance, statuses) -> InfeasibleError:
    best = min(statuses, key=lambda s: s.delta)
    return InfeasibleError(
        f"no depot component covers every vertex; vertex {best.farthest_vertex} is "
        f"{best.delta:.6g} from the closest usable component (D/2={instance.D / 2:.6g})",
        vertex=best.farthest_vertex)


def approximation_algorithm(instance: Instance):
    """Run the approximation pipeline on every coverable component; keep the cheapest walk."""
    t0 = time.perf_counter()
    dg = build_depot_graph(instance)
    statuses = component_feasibility(instance, dg)
    coverable = [s for s in statuses if s.coverable]
    if not coverable:
        raise _infeasible(instance, statuses)
    best = None
    for st in coverable:
        nodes, diag = solve_component(instance, dg, st.component)
        walk = Walk.from_nodes(instance, nodes)
        cost, recharges = walk_cost(instance, walk)
        key = (cost, recharges, st.component)
        if best is None or key < best[0]:
            best = (key, walk, diag)
        if not instance.task_ids:
            break
    _, walk, diag = best
    report = make_report(instance, walk, "approx", (time.perf_counter() - t0) * 1e3,
                         diagnostics=diag)
    log.debug("approx %s: %s", instance.name, report.summary())
    return walk, report
