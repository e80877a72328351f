"""Graph services shared by every solver: nearest depots, the depot graph,
walks, cost accounting and the feasibility validator."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .instance import Instance

TASK = "task"
DEPOT = "depot"


# -- small graph utilities -------------------------------------------------

class DisjointSet:
    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def kruskal(nodes: Sequence[int], weight, key=None) -> list:
    """Minimum spanning forest as a list of ``(w, u, v)`` with ``u < v``.

    Ties are broken lexicographically on ``(w, u, v)`` unless ``key`` is given;
    ``key(w, u, v)`` then replaces the sort key. Edges with weight ``inf``
    are never used.
    """
    nodes = sorted(nodes)
    edges = []
    for a in range(len(nodes)):
        u = nodes[a]
        for b in range(a + 1, len(nodes)):
            v = nodes[b]
            w = weight(u, v)
            if w != float("inf"):
                edges.append((w, u, v))
    edges.sort(key=(lambda e: key(*e)) if key else None)
    dsu = DisjointSet(nodes)
    tree = []
    for w, u, v in edges:
        if dsu.union(u, v):
            tree.append((w, u, v))
            if len(tree) == len(nodes) - 1:
                break
    return tree


# -- nearest depot ---------------------------------------------------------

def nearest_depot(instance: Instance, v: int, depots: Optional[Sequence[int]] = None):
    """``(depot, distance)`` of the closest depot to ``v``; ties go to the lowest id."""
    depots = instance.depot_ids if depots is None else depots
    if not depots:
        raise ValidationError("no depots to choose from")
    row = instance.d[v]
    best = min(depots, key=lambda q: (row[q], q))
    return best, row[best]


def nearest_table(instance: Instance, depots: Sequence[int]) -> tuple:
    """Per-node nearest depot and distance restricted to ``depots``."""
    cols = np.asarray(sorted(depots))
    sub = instance.dist[:, cols]
    arg = np.argmin(sub, axis=1)  # first minimum == lowest depot id
    return cols[arg].tolist(), sub[np.arange(sub.shape[0]), arg].tolist()


# -- depot graph -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DepotGraph:
    """Depots joined when at most D apart, with hop distances and hop paths."""

    depots: tuple
    adjacency: frozenset  # {(qi, qj)} with qi < qj
    components: tuple  # tuple of sorted depot tuples, ordered by smallest id
    hop: dict  # hop[(a, b)] for a, b in the same component
    _pred: dict = field(repr=False)  # _pred[a][b] = predecessor of b on a's path tree

    def hop_dist(self, a: int, b: int) -> float:
        return self.hop.get((a, b), float("inf"))

    def component_of(self, q: int) -> tuple:
        for comp in self.components:
            if q in comp:
                return comp
        raise KeyError(q)

    def path(self, a: int, b: int) -> list:
        """Depot sequence a..b with the fewest hops, shortest length among those."""
        if (a, b) not in self.hop:
            raise ValueError(f"depots {a} and {b} are not connected")
        pred = self._pred[a]
        seq = [b]
        while seq[-1] != a:
            seq.append(pred[seq[-1]])
        return seq[::-1]


def build_depot_graph(instance: Instance, depots: Optional[Sequence[int]] = None) -> DepotGraph:
    qs = tuple(sorted(instance.depot_ids if depots is None else depots))
    d = instance.d
    nbrs = {q: [] for q in qs}
    adj = set()
    for i, a in enumerate(qs):
        for b in qs[i + 1:]:
            if instance.leq(d[a][b], instance.D):
                nbrs[a].append(b)
                nbrs[b].append(a)
                adj.add((a, b))
    hop, preds = {}, {}
    for s in qs:
        # BFS layers; within a layer keep the predecessor giving the shortest length
        level = {s: 0}
        length = {s: 0.0}
        pred = {s: s}
        frontier = [s]
        while frontier:
            nxt = {}
            for u in frontier:
                for v in nbrs[u]:
                    if v in level:
                        continue
                    cand = length[u] + d[u][v]
                    if v not in nxt or (cand, u) < (length[v], pred[v]):
                        nxt[v] = True
                        length[v] = cand
                        pred[v] = u
            for v in nxt:
                level[v] = level[frontier[0]] + 1
            frontier = sorted(nxt)
        for t, h in level.items():
            hop[(s, t)] = h
        preds[s] = pred
    seen, comps = set(), []
    for q in qs:
        if q in seen:
            continue
        comp = tuple(sorted(t for (s, t) in hop if s == q))
        seen.update(comp)
        comps.append(comp)
    return DepotGraph(qs, frozenset(adj), tuple(comps), hop, preds)


@dataclass(frozen=True)
class ComponentStatus:
    component: tuple
    coverable: bool
    delta: float  # largest nearest-depot distance over V, depots restricted to the component
    farthest_vertex: Optional[int]


def component_feasibility(instance: Instance, depot_graph: DepotGraph) -> list:
    """Coverability of each depot-graph component.

    A component is coverable iff every task vertex is within D/2 of one of its
    depots; the instance is feasible iff at least one component is coverable.
    """
    out = []
    tasks = list(instance.task_ids)
    for comp in depot_graph.components:
        if tasks:
            sub = instance.dist[np.ix_(tasks, list(comp))].min(axis=1)
            k = int(np.argmax(sub))
            delta, far = float(sub[k]), tasks[k]
        else:
            delta, far = 0.0, None
        out.append(ComponentStatus(comp, instance.leq(delta, instance.D / 2), delta, far))
    return out


# -- walks -----------------------------------------------------------------

class Step(NamedTuple):
    node: int
    kind: str


@dataclass(frozen=True)
class Walk:
    steps: tuple

    @classmethod
    def from_nodes(cls, instance: Instance, nodes: Sequence[int]) -> "Walk":
        flags = instance.is_depot
        return cls(tuple(Step(int(v), DEPOT if flags[v] else TASK) for v in nodes))

    @property
    def nodes(self) -> list:
        return [s.node for s in self.steps]

    @property
    def start_depot(self) -> int:
        return self.steps[0].node

    @property
    def end_depot(self) -> int:
        return self.steps[-1].node

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    reason: str = ""
    leg: Optional[tuple] = None  # (start index, end index) of the violating sub-walk
    leg_length: Optional[float] = None
    missing: tuple = ()

    def __bool__(self):
        return self.feasible


def _check_nodes(instance: Instance, walk: Walk):
    n = instance.n_nodes
    flags = instance.is_depot
    for i, (v, kind) in enumerate(walk.steps):
        if not isinstance(v, (int, np.integer)) or not 0 <= v < n:
            raise ValidationError(f"step {i} references unknown node {v!r}")
        if kind not in (TASK, DEPOT):
            raise ValidationError(f"step {i} has unknown kind {kind!r}")
        if (kind == DEPOT) != flags[v]:
            raise ValidationError(f"step {i}: node {v} tagged {kind!r}")


def validate_walk(instance: Instance, walk: Walk) -> Verdict:
    """Check the battery constraint between consecutive depot visits and coverage."""
    if not walk.steps:
        raise ValidationError("empty walk")
    _check_nodes(instance, walk)
    d = instance.d
    steps = walk.steps
    if steps[0].kind != DEPOT:
        return Verdict(False, "walk does not start at a depot", (0, 0))
    if steps[-1].kind != DEPOT:
        return Verdict(False, "walk does not end at a depot", (len(steps) - 1, len(steps) - 1))
    start, acc = 0, 0.0
    for i in range(1, len(steps)):
        acc += d[steps[i - 1].node][steps[i].node]
        if steps[i].kind == DEPOT:
            if not instance.leq(acc, instance.D):
                return Verdict(False, f"sub-walk of length {acc:.6g} exceeds D={instance.D:.6g}",
                               (start, i), acc)
            start, acc = i, 0.0
    seen = {s.node for s in steps}
    missing = tuple(v for v in instance.task_ids if v not in seen)
    if missing:
        return Verdict(False, f"{len(missing)} task vertices not visited", missing=missing)
    return Verdict(True)


def collapse(nodes: Sequence[int]) -> list:
    """Drop consecutive repeats of the same node."""
    out = []
    for v in nodes:
        if not out or out[-1] != v:
            out.append(v)
    return out


def walk_cost(instance: Instance, walk: Walk) -> tuple:
    """``(length, recharges)``; recharges count depot visits after the first."""
    nodes = collapse(walk.nodes)
    d = instance.d
    cost = sum(d[a][b] for a, b in zip(nodes, nodes[1:]))
    visits = sum(1 for v in nodes if instance.is_depot[v])
    return float(cost), max(visits - 1, 0)


def replay_original(instance: Instance, walk: Walk) -> tuple:
    """Cost and feasibility of ``walk`` under the untransformed accounting.

    Each recharge stop takes T_original; the battery must last D_original
    between depot visits. Returns ``(travel + stops, feasible)``.
    """
    nodes = collapse(walk.nodes)
    base = instance.base_dist
    travel = 0.0
    acc, ok = 0.0, True
    for a, b in zip(nodes, nodes[1:]):
        travel += base[a, b]
        acc += base[a, b]
        if instance.is_depot[b]:
            ok &= acc <= instance.D_original + instance.tol
            acc = 0.0
    _, recharges = walk_cost(instance, walk)
    return float(travel + recharges * instance.T_original), ok


def trim_walk(instance: Instance, nodes: Sequence[int]) -> list:
    """Cut leading and trailing depot-only moves that visit no task vertex."""
    nodes = collapse(nodes)
    flags = instance.is_depot
    task_pos = [i for i, v in enumerate(nodes) if not flags[v]]
    if not task_pos:
        return nodes[:1]
    first, last = task_pos[0], task_pos[-1]
    lo = max(i for i in range(first) if flags[nodes[i]])
    hi = min(i for i in range(last + 1, len(nodes)) if flags[nodes[i]])
    return nodes[lo:hi + 1]


# -- reports and serialization ---------------------------------------------

@dataclass
class SolveReport:
    algorithm: str
    cost: float
    recharges: int
    runtime_ms: float
    feasible: bool
    violation: Optional[str] = None
    optimal: Optional[bool] = None
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> str:
        status = "feasible" if self.feasible else f"INFEASIBLE ({self.violation})"
        return (f"{self.algorithm}: cost={self.cost:.6g} recharges={self.recharges} "
                f"runtime={self.runtime_ms:.1f}ms {status}")


def make_report(instance: Instance, walk: Walk, algorithm: str, runtime_ms: float,
                **extra) -> SolveReport:
    verdict = validate_walk(instance, walk)
    cost, recharges = walk_cost(instance, walk)
    return SolveReport(algorithm, cost, recharges, runtime_ms, verdict.feasible,
                       None if verdict.feasible else verdict.reason, **extra)


def walk_to_json(instance: Instance, walk: Walk, algorithm: str) -> dict:
    verdict = validate_walk(instance, walk)
    cost, recharges = walk_cost(instance, walk)
    return {
        "instance_name": instance.name,
        "algorithm": algorithm,
        "steps": [{"node": int(s.node), "kind": s.kind} for s in walk.steps],
        "cost": round(cost, 9),
        "recharges": recharges,
        "feasible": verdict.feasible,
    }


def dumps_walk(instance: Instance, walk: Walk, algorithm: str) -> str:
    return json.dumps(walk_to_json(instance, walk, algorithm), indent=2) + "\n"


def walk_from_json(data) -> Walk:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        return Walk(tuple(Step(int(s["node"]), str(s["kind"])) for s in data["steps"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed walk JSON: {exc}") from None
