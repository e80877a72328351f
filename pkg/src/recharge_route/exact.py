"""Exact oracles for desk-sized instances.

``exact_min_length`` / ``exact_min_recharges`` run a label-setting best-first
search over (visited set, node, battery used); ``exact_tsp`` is Held-Karp and
``exact_segment_cover`` a subset DP. All are exponential and guarded by size
limits.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Optional

from .core import Walk, make_report, nearest_table
from .errors import InfeasibleError, SearchTimeout, ValidationError
from .instance import Instance


@dataclass(frozen=True)
class SearchLimits:
    max_vertices: int = 10
    time_budget: Optional[float] = None  # seconds


@dataclass(frozen=True)
class SearchState:
    visited: int  # bitmask over task vertices
    node: int
    charge_used: float


def _search(instance: Instance, objective: str, limits: SearchLimits, dominance: bool):
    tasks = list(instance.task_ids)
    n = len(tasks)
    if n > limits.max_vertices:
        raise ValidationError(f"{n} task vertices exceed the exact search limit "
                              f"of {limits.max_vertices}")
    depots = list(instance.depot_ids)
    if not depots:
        raise ValidationError("instance has no depots")
    if n == 0:
        return [depots[0]], 0
    d = instance.d
    D = instance.D
    tol = instance.tol
    _, near_d = nearest_table(instance, depots)
    bit = {v: 1 << i for i, v in enumerate(tasks)}
    full = (1 << n) - 1
    is_depot = instance.is_depot
    for v in tasks:
        if near_d[v] > D / 2 + tol:
            raise InfeasibleError(f"vertex {v} cannot be reached and left within D", vertex=v)

    deadline = None if limits.time_budget is None else time.perf_counter() + limits.time_budget
    by_recharges = objective == "recharges"

    # label arrays: parent index, node, for path reconstruction
    parents, nodes_of = [], []
    frontier = {}  # (mask, node) -> list of (cost, charge, recharges, label id)
    heap = []
    tick = itertools.count()
    seen_exact = set()

    def push(mask, node, cost, charge, recharges, parent):
        key_state = (mask, node)
        if dominance:
            bucket = frontier.setdefault(key_state, [])
            for c, ch, r, _ in bucket:
                if c <= cost + tol and ch <= charge + tol and (not by_recharges or r <= recharges):
                    return
            bucket[:] = [e for e in bucket
                         if not (cost <= e[0] + tol and charge <= e[1] + tol
                                 and (not by_recharges or recharges <= e[2]))]
        else:
            sig = (mask, node, round(cost, 9), round(charge, 9), recharges)
            if sig in seen_exact:
                return
            seen_exact.add(sig)
        lid = len(parents)
        parents.append(parent)
        nodes_of.append(node)
        if dominance:
            frontier[key_state].append((cost, charge, recharges, lid))
        prio = (recharges, cost) if by_recharges else (cost, recharges)
        heapq.heappush(heap, (prio, next(tick), lid, mask, node, cost, charge, recharges))

    for q in depots:
        push(0, q, 0.0, 0.0, 0, -1)

    live = None
    expanded = 0
    while heap:
        prio, _, lid, mask, u, cost, charge, recharges = heapq.heappop(heap)
        if dominance:
            live = frontier.get((mask, u), ())
            if not any(e[3] == lid for e in live):
                continue  # superseded by a dominating label
        expanded += 1
        if deadline is not None and expanded % 256 == 0 and time.perf_counter() > deadline:
            raise SearchTimeout("exact search timed out", lower_bound=prio, expanded=expanded)
        if mask == full and is_depot[u]:
            path = []
            while lid != -1:
                path.append(nodes_of[lid])
                lid = parents[lid]
            return path[::-1], expanded
        row = d[u]
        for v in tasks:
            if mask & bit[v]:
                continue
            leg = row[v]
            if charge + leg + near_d[v] <= D + tol:
                push(mask | bit[v], v, cost + leg, charge + leg, recharges, lid)
        for q in depots:
            leg = row[q]
            if q == u or (is_depot[u] and leg == 0):
                continue
            if charge + leg <= D + tol:
                push(mask, q, cost + leg, 0.0, recharges + 1, lid)
    raise InfeasibleError("search space exhausted without covering every vertex")


def _exact(instance: Instance, objective: str, limits, dominance: bool, tag: str):
    limits = limits or SearchLimits()
    t0 = time.perf_counter()
    nodes, expanded = _search(instance, objective, limits, dominance)
    walk = Walk.from_nodes(instance, nodes)
    report = make_report(instance, walk, tag, (time.perf_counter() - t0) * 1e3,
                         optimal=True, diagnostics={"expanded": expanded, "objective": objective})
    return walk, report


def exact_min_length(instance: Instance, limits: Optional[SearchLimits] = None,
                     dominance: bool = True):
    """Shortest feasible walk covering every task vertex."""
    return _exact(instance, "length", limits, dominance, "exact")


def exact_min_recharges(instance: Instance, limits: Optional[SearchLimits] = None,
                        dominance: bool = True):
    """Feasible walk with the fewest recharges (ties broken by length)."""
    return _exact(instance, "recharges", limits, dominance, "exact")


def exact_tsp(weights, max_nodes: int = 9):
    """Optimal closed tour by Held-Karp; returns ``(tour, cost)`` with tour[0] == 0."""
    W = [list(map(float, r)) for r in weights]
    n = len(W)
    if n == 0:
        raise ValidationError("empty graph")
    if n > max_nodes:
        raise ValidationError(f"exact_tsp limited to {max_nodes} nodes, got {n}")
    if n == 1:
        return [0], 0.0
    if n == 2:
        return [0, 1], 2 * W[0][1]
    m = n - 1  # node 0 is the fixed start; bit i stands for node i + 1
    best = {(1 << i, i): (W[0][i + 1], -1) for i in range(m)}
    for size in range(2, m + 1):
        for combo in itertools.combinations(range(m), size):
            mask = sum(1 << i for i in combo)
            for j in combo:
                prev = mask & ~(1 << j)
                best[(mask, j)] = min(
                    (best[(prev, i)][0] + W[i + 1][j + 1], i) for i in combo if i != j)
    full = (1 << m) - 1
    cost, last = min((best[(full, j)][0] + W[j + 1][0], j) for j in range(m))
    order, mask = [], full
    while last != -1:
        order.append(last + 1)
        mask, last = mask & ~(1 << last), best[(mask, last)][1]
    return [0] + order[::-1], cost


def exact_segment_cover(instance: Instance, max_vertices: int = 8, depots=None) -> int:
    """Fewest depot-anchored segments of length <= D covering all task vertices."""
    tasks = list(instance.task_ids)
    n = len(tasks)
    if n > max_vertices:
        raise ValidationError(f"exact_segment_cover limited to {max_vertices} vertices, got {n}")
    if n == 0:
        return 0
    depots = sorted(instance.depot_ids if depots is None else depots)
    d = instance.d
    _, near_d = nearest_table(instance, depots)
    inf = float("inf")
    # g[mask][i]: shortest path leaving some depot, visiting mask, ending at tasks[i]
    g = [[inf] * n for _ in range(1 << n)]
    for i, v in enumerate(tasks):
        g[1 << i][i] = near_d[v]
    for mask in range(1, 1 << n):
        row = g[mask]
        for i in range(n):
            if row[i] == inf:
                continue
            for j in range(n):
                if mask & (1 << j):
                    continue
                cand = row[i] + d[tasks[i]][tasks[j]]
                nm = mask | (1 << j)
                if cand < g[nm][j]:
                    g[nm][j] = cand
    feasible = [False] * (1 << n)
    for mask in range(1, 1 << n):
        best = min(g[mask][i] + near_d[tasks[i]] for i in range(n) if mask & (1 << i))
        feasible[mask] = instance.leq(best, instance.D)
    cover = [0] + [inf] * ((1 << n) - 1)
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            block = sub | low
            if feasible[block] and cover[mask ^ block] + 1 < cover[mask]:
                cover[mask] = cover[mask ^ block] + 1
            if sub == 0:
                break
            sub = (sub - 1) & rest
    if cover[-1] == inf:
        raise InfeasibleError("some vertex cannot be served by any segment")
    return int(cover[-1])
