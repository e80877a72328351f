"""Heuristic refinement: bundle distance classes, sweep spanning-forest
granularity, repair each component tour with depot insertions and stitch the
resulting segments by a TSP over their end depots."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import (DepotGraph, DisjointSet, Walk, build_depot_graph, component_feasibility,
                   kruskal, make_report, nearest_table, trim_walk, walk_cost)
from .errors import InfeasibleError, ValidationError
from .instance import Instance, metric_completion
from .route_approx import _infeasible, christofides_tsp, open_path_order
from .segment_cover import PartitionScheme, Segment, compute_partition, make_segment

log = logging.getLogger(__name__)

TOUR_METHODS = ("christofides", "nearest_neighbor_2opt")


@dataclass
class HeuristicConfig:
    b: Union[int, str] = "auto"
    k_max: Optional[int] = None
    tour_method: str = "christofides"
    time_budget: Optional[float] = None  # seconds; the sweep stops early and keeps its best

    def __post_init__(self):
        if isinstance(self.b, str):
            if self.b.lower() != "auto":
                self.b = int(self.b)
            else:
                self.b = "auto"
        if self.b != "auto" and self.b < 1:
            raise ValueError("bundling width b must be >= 1")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.tour_method not in TOUR_METHODS:
            raise ValueError(f"tour_method must be one of {TOUR_METHODS}")


def bundle_partitions(partition: PartitionScheme, b: int) -> list:
    """Merge classes in stride-b windows: V_0..V_{b-1}, V_b..V_{2b-1}, ...

    Out-and-back boundary vertices (REAL mode) join the first bundle. Empty
    bundles are dropped.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    classes = partition.classes
    out = []
    for j in range(0, len(classes), b):
        verts = [v for cls in classes[j:j + b] for v in cls]
        if j == 0:
            verts = list(partition.boundary) + verts
        if verts:
            out.append(tuple(sorted(verts)))
    return out


def spanning_forest(vertex_set: Sequence[int], k: int, dist, mst: Optional[list] = None) -> list:
    """Components (sorted tuples) of the MST with its k-1 heaviest edges removed."""
    verts = sorted(vertex_set)
    if not 1 <= k <= len(verts):
        raise ValueError(f"k={k} outside 1..{len(verts)}")
    if mst is None:
        mst = kruskal(verts, lambda a, b: dist[a][b])
    keep = sorted(mst)[:len(mst) - (k - 1)]
    dsu = DisjointSet(verts)
    for _, a, b in keep:
        dsu.union(a, b)
    groups = {}
    for v in verts:
        groups.setdefault(dsu.find(v), []).append(v)
    return sorted(tuple(g) for g in groups.values())


def _two_opt(order: list, d) -> list:
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, n if i > 0 else n - 1):
                c, e = order[j], order[(j + 1) % n]
                if d[a][c] + d[b][e] < d[a][b] + d[c][e] - 1e-12:
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    b = order[i + 1]
                    improved = True
    return order


def component_tour(vertices: Sequence[int], tour_method: str, dist) -> list:
    """Closed tour (as a vertex order) through ``vertices``."""
    verts = sorted(vertices)
    if len(verts) <= 2:
        return verts
    if tour_method == "christofides":
        sub = [[dist[a][b] for b in verts] for a in verts]
        return [verts[i] for i in christofides_tsp(sub, check_metric=False)]
    if tour_method == "nearest_neighbor_2opt":
        order, left = [verts[0]], set(verts[1:])
        while left:
            u = order[-1]
            nxt = min(left, key=lambda v: (dist[u][v], v))
            order.append(nxt)
            left.remove(nxt)
        return _two_opt(order, dist)
    raise ValueError(f"unknown tour method {tour_method!r}")


def _insert_one_direction(order: list, instance: Instance, depots: np.ndarray, near_q, near_d):
    d = instance.d
    dist = instance.dist
    D = instance.D
    tol = instance.tol
    pieces = []
    first = order[0]
    cur = [near_q[first], first]
    r = D - near_d[first]
    for u, v in zip(order, order[1:]):
        duv = d[u][v]
        if r + tol >= duv + near_d[v]:
            cur.append(v)
            r -= duv
            continue
        du = dist[u, depots]
        dv = dist[depots, v]
        ok = (du <= r + tol) & (dv + near_d[v] <= D + tol)
        if ok.any():
            total = np.where(ok, du + dv, np.inf)
            q = int(depots[int(np.argmin(total))])
            cur.append(q)
            pieces.append(cur)
            cur = [q, v]
            r = D - d[q][v]
        else:
            cur.append(near_q[u])
            pieces.append(cur)
            cur = [near_q[v], v]
            r = D - near_d[v]
    cur.append(near_q[order[-1]])
    pieces.append(cur)
    return pieces


def insert_depots(tour: Sequence[int], instance: Instance, depots: Optional[Sequence[int]] = None,
                  nearest=None, level=None) -> list:
    """Walk a closed tour, inserting recharge stops so that every piece is feasible.

    Starts from the tour vertex closest to a depot. A hop u->v is taken
    directly when the battery still reaches a depot from v afterwards;
    otherwise one depot is inserted between u and v if possible, and only
    then is the tour split. Both travel directions are tried and the one
    with fewer (then shorter) pieces is kept.
    """
    depots = sorted(instance.depot_ids if depots is None else depots)
    near_q, near_d = nearest if nearest is not None else nearest_table(instance, depots)
    tour = list(tour)
    if not tour:
        return []
    half = instance.D / 2
    for v in tour:
        if not instance.leq(near_d[v], half):
            raise InfeasibleError(f"vertex {v} is farther than D/2 from every depot", vertex=v)
    start = min(range(len(tour)), key=lambda i: (near_d[tour[i]], tour[i]))
    fwd = tour[start:] + tour[:start]
    bwd = [fwd[0]] + fwd[1:][::-1]
    dep_arr = np.asarray(depots)
    best = None
    for order in (fwd, bwd) if len(tour) > 2 else (fwd,):
        pieces = _insert_one_direction(order, instance, dep_arr, near_q, near_d)
        segs = [make_segment(instance, p, level) for p in pieces]
        key = (len(segs), sum(s.length for s in segs))
        if best is None or key < best[0]:
            best = (key, segs)
    return best[1]


def chains_of(segments: Sequence[Segment]) -> list:
    """Group consecutive segments that continue from the previous one's end depot."""
    chains = []
    for s in segments:
        if chains and chains[-1][-1] == s.nodes[0]:
            chains[-1].extend(s.nodes[1:])
        else:
            chains.append(list(s.nodes))
    return chains


def stitch_chains(instance: Instance, depot_graph: DepotGraph, chains: Sequence[list],
                  info: Optional[dict] = None) -> list:
    """Order depot-to-depot chains by a TSP over their end depots and concatenate."""
    if not chains:
        return []
    n = len(chains)
    d = instance.d
    scale = 1.0 / (instance.D * (n + 1))

    def gap(a: int, b: int) -> float:
        return depot_graph.hop_dist(a, b) + d[a][b] * scale

    W = np.zeros((n, n))
    for i in range(n):
        ei = (chains[i][0], chains[i][-1])
        for j in range(i + 1, n):
            ej = (chains[j][0], chains[j][-1])
            W[i, j] = W[j, i] = min(gap(a, b) for a in ei for b in ej)
    W = metric_completion(W)
    order = open_path_order(W, christofides_tsp(W, check_metric=False))
    if info is not None:
        info["chain_order"] = order
    first = chains[order[0]]
    if n > 1:
        nxt = chains[order[1]]
        ends = (nxt[0], nxt[-1])
        if min(gap(first[0], e) for e in ends) < min(gap(first[-1], e) for e in ends):
            first = first[::-1]
    nodes = list(first)
    for k in order[1:]:
        ch = chains[k]
        here = nodes[-1]
        if gap(here, ch[-1]) < gap(here, ch[0]):
            ch = ch[::-1]
        hop = depot_graph.path(here, ch[0])
        nodes.extend(hop[1:])
        nodes.extend(ch[1:])
    return nodes


class _TourCache:
    def __init__(self, instance: Instance, component: Sequence[int], tour_method: str):
        self.instance = instance
        self.component = sorted(component)
        self.tour_method = tour_method
        self.nearest = nearest_table(instance, self.component)
        self.store = {}

    def segments(self, verts: tuple) -> list:
        key = verts
        if key not in self.store:
            tour = component_tour(verts, self.tour_method, self.instance.d)
            self.store[key] = insert_depots(tour, self.instance, self.component, self.nearest)
        return self.store[key]


def _out_of_time(deadline) -> bool:
    return deadline is not None and time.perf_counter() > deadline


def _run_width(instance: Instance, dg: DepotGraph, partition: PartitionScheme, b: int,
               config: HeuristicConfig, cache: _TourCache, deadline=None):
    d = instance.d
    sweep, chosen = [], []
    kept = []
    for bi, bundle in enumerate(bundle_partitions(partition, b)):
        mst = kruskal(bundle, lambda a, c: d[a][c])
        kmax = len(bundle) if config.k_max is None else min(len(bundle), config.k_max)
        best = None
        for k in range(1, kmax + 1):
            if best is not None and _out_of_time(deadline):
                break
            segs = []
            for comp in spanning_forest(bundle, k, d, mst):
                segs.extend(cache.segments(comp))
            recharges = len(segs)
            cost = sum(s.length for s in segs)
            sweep.append({"b": b, "bundle_index": bi, "k": k, "recharges": recharges,
                          "cost": round(cost, 9)})
            key = (recharges, round(cost, 9), k)  # float noise must not beat the k tie-break
            if best is None or key < best[0]:
                best = (key, segs)
        chosen.append({"bundle_index": bi, "k": best[0][2], "recharges": best[0][0]})
        kept.extend(best[1])
    info = {}
    nodes = stitch_chains(instance, dg, chains_of(kept), info)
    nodes = trim_walk(instance, nodes)
    return nodes, {"b": b, "sweep": sweep, "chosen": chosen, "n_segments": len(kept),
                   "chain_order": info.get("chain_order", [])}


def heuristic_component(instance: Instance, dg: DepotGraph, component: Sequence[int],
                        config: HeuristicConfig):
    partition = compute_partition(instance, component)
    if not instance.task_ids:
        return [min(component)], {"component": list(component), "widths": []}
    n_classes = partition.t + 1
    if config.b == "auto":
        widths = list(range(1, n_classes + 1))
    else:
        widths = [min(config.b, n_classes)]
    cache = _TourCache(instance, component, config.tour_method)
    deadline = None
    if config.time_budget is not None:
        deadline = time.perf_counter() + config.time_budget
    best, runs = None, []
    for b in widths:
        if best is not None and _out_of_time(deadline):
            break
        nodes, diag = _run_width(instance, dg, partition, b, config, cache, deadline)
        cost, recharges = walk_cost(instance, Walk.from_nodes(instance, nodes))
        runs.append({"b": b, "recharges": recharges, "cost": round(cost, 9), **diag})
        key = (recharges, cost, b)
        if best is None or key < best[0]:
            best = (key, nodes)
    return best[1], {"component": list(component), "t": partition.t,
                     "slack": partition.slack, "widths": runs, "b_chosen": best[0][2],
                     "truncated": _out_of_time(deadline)}


def heuristic_algorithm(instance: Instance, config: Optional[HeuristicConfig] = None):
    """Heuristic walk over the best coverable depot component."""
    config = config or HeuristicConfig()
    t0 = time.perf_counter()
    dg = build_depot_graph(instance)
    statuses = component_feasibility(instance, dg)
    coverable = [s for s in statuses if s.coverable]
    if not coverable:
        raise _infeasible(instance, statuses)
    best = None
    for st in coverable:
        nodes, diag = heuristic_component(instance, dg, st.component, config)
        walk = Walk.from_nodes(instance, nodes)
        cost, recharges = walk_cost(instance, walk)
        key = (recharges, cost, st.component)
        if best is None or key < best[0]:
            best = (key, walk, diag)
        if not instance.task_ids:
            break
    _, walk, diag = best
    report = make_report(instance, walk, "heuristic", (time.perf_counter() - t0) * 1e3,
                         diagnostics=diag)
    log.debug("heuristic %s: %s", instance.name, report.summary())
    return walk, report
