"""Cover the task vertices with depot-anchored segments of length at most D.

Vertices are bucketed by how far they sit from the nearest depot; each
bucket gets a length-bounded unrooted path cover whose paths are then hooked
to the nearest depots at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import kruskal, nearest_table
from .errors import InfeasibleError
from .instance import Instance, WeightMode, ceil_log2

PATH = "path"
CYCLE = "cycle"
BOUNDARY_LEVEL = -1


@dataclass(frozen=True)
class PartitionScheme:
    delta_max: float  # largest nearest-depot distance over the partitioned vertices
    slack: float
    t: int
    classes: tuple  # classes[j] = sorted tuple of task vertices in V_j
    boundary: tuple = ()  # REAL mode: vertices at distance D/2, served out-and-back
    integer: bool = True

    def class_bound(self, j: int) -> float:
        """Length budget for the unrooted paths of class j."""
        scale = 1 if j == 0 else 2 ** j
        return scale * self.slack - (1 if self.integer else 0)


@dataclass(frozen=True)
class Segment:
    kind: str
    nodes: tuple  # depot ... depot; a cycle starts and ends at the same depot
    anchors: tuple
    length: float
    level: Optional[int] = None

    @property
    def tasks(self) -> tuple:
        return self.nodes[1:-1]

    @property
    def ends(self) -> tuple:
        return self.nodes[0], self.nodes[-1]

    def reversed(self) -> "Segment":
        return Segment(self.kind, self.nodes[::-1], self.anchors[::-1], self.length, self.level)

    def to_json(self) -> dict:
        return {"kind": self.kind, "nodes": list(self.nodes), "anchors": list(self.anchors),
                "length": round(self.length, 9)}


@dataclass(frozen=True)
class SegmentSet:
    segments: tuple
    covered: frozenset
    partition: Optional[PartitionScheme] = None

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def to_json(self) -> dict:
        return {"segments": [s.to_json() for s in self.segments]}


def make_segment(instance: Instance, nodes: Sequence[int], level=None) -> Segment:
    d = instance.d
    nodes = tuple(nodes)
    length = sum(d[a][b] for a, b in zip(nodes, nodes[1:]))
    if nodes[0] == nodes[-1]:
        return Segment(CYCLE, nodes, (nodes[0],), float(length), level)
    return Segment(PATH, nodes, (nodes[0], nodes[-1]), float(length), level)


def segment_violations(instance: Instance, seg: Segment) -> list:
    """Which feasibility conditions ``seg`` breaks (empty list when feasible)."""
    bad = []
    d = instance.d
    length = sum(d[a][b] for a, b in zip(seg.nodes, seg.nodes[1:]))
    if not instance.leq(length, instance.D):
        bad.append(f"length {length:.6g} exceeds D={instance.D:.6g}")
    if abs(length - seg.length) > instance.tol:
        bad.append("recorded length does not match the node sequence")
    if seg.kind == CYCLE:
        if seg.nodes[0] != seg.nodes[-1] or not any(instance.is_depot[v] for v in seg.nodes):
            bad.append("cycle contains no depot")
    elif seg.kind == PATH:
        if not (instance.is_depot[seg.nodes[0]] and instance.is_depot[seg.nodes[-1]]):
            bad.append("path endpoint is not a depot")
    else:
        bad.append(f"unknown segment kind {seg.kind!r}")
    return bad


def compute_partition(instance: Instance, component: Sequence[int],
                      eps: Optional[float] = None) -> PartitionScheme:
    """Bucket the task vertices by nearest-depot distance (depots of ``component``)."""
    D = instance.D
    half = D / 2
    integer = instance.weight_mode is WeightMode.INTEGER
    _, near = nearest_table(instance, component)
    dq = {v: near[v] for v in instance.task_ids}
    if not dq:
        return PartitionScheme(0.0, half, 0, ((),), (), integer)
    far = max(dq, key=lambda v: (dq[v], -v))
    if not instance.leq(dq[far], half):
        raise InfeasibleError(
            f"vertex {far} is {dq[far]:.6g} from the nearest depot, more than D/2={half:.6g}",
            vertex=far)

    boundary = ()
    if integer:
        delta_max = max(dq.values())
        slack = half - delta_max + 1
    else:
        eps = 1e-6 * D if eps is None else eps
        boundary = tuple(sorted(v for v, x in dq.items() if x >= half - eps))
        rest = [x for v, x in dq.items() if x < half - eps]
        delta_max = max(rest, default=0.0)
        slack = max(half - delta_max, eps)
    t = ceil_log2(D / (2 * slack))

    buckets = [[] for _ in range(t + 1)]
    skip = set(boundary)
    for v in sorted(dq):
        if v in skip:
            continue
        x = dq[v]
        # REAL mode: half - slack == delta_max, so V_0's lower edge is made inclusive
        if x > half - slack or (not integer and x >= half - slack - instance.tol):
            j = 0
        else:
            j = 1
            while j < t and not x > half - 2 ** j * slack:
                j += 1
            # the lowest class also absorbs vertices sitting on a depot
            j = min(j, t)
        buckets[j].append(v)
    return PartitionScheme(delta_max, slack, t, tuple(tuple(b) for b in buckets),
                           boundary, integer)


def _preorder(root: int, adj: dict) -> list:
    order, stack, seen = [], [root], {root}
    while stack:
        u = stack.pop()
        order.append(u)
        for w in sorted(adj[u], reverse=True):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return order


def unrooted_path_cover(vertex_set: Sequence[int], length_bound: float, dist,
                        tol: float = 1e-9) -> list:
    """Cover ``vertex_set`` with paths no longer than ``length_bound``.

    Tree splitting: minimum spanning forest over edges within the bound, a
    depth-first ordering of each tree, then greedy maximal chopping.
    ``dist`` is indexable as ``dist[a][b]``.
    """
    verts = sorted(vertex_set)
    if not verts:
        return []
    limit = length_bound + tol
    inf = float("inf")

    def w(a, b):
        x = dist[a][b]
        return x if x <= limit else inf

    adj = {v: [] for v in verts}
    for _, a, b in kruskal(verts, w):
        adj[a].append(b)
        adj[b].append(a)
    paths, seen = [], set()
    for root in verts:
        if root in seen:
            continue
        order = _preorder(root, adj)
        seen.update(order)
        cur, used = [order[0]], 0.0
        for v in order[1:]:
            step = dist[cur[-1]][v]
            if used + step <= limit:
                cur.append(v)
                used += step
            else:
                paths.append(cur)
                cur, used = [v], 0.0
        paths.append(cur)
    return paths


def path_length(path: Sequence[int], dist) -> float:
    return float(sum(dist[a][b] for a, b in zip(path, path[1:])))


def min_segment_cover(instance: Instance, component: Sequence[int],
                      partition: Optional[PartitionScheme] = None) -> SegmentSet:
    """Feasible segments covering every task vertex, anchored in ``component``."""
    if partition is None:
        partition = compute_partition(instance, component)
    nearest, _ = nearest_table(instance, component)
    segs = []
    for v in partition.boundary:
        q = nearest[v]
        segs.append(make_segment(instance, (q, v, q), BOUNDARY_LEVEL))
    for j, cls in enumerate(partition.classes):
        if not cls:
            continue
        bound = max(partition.class_bound(j), 0.0)
        for p in unrooted_path_cover(cls, bound, instance.d, instance.tol):
            nodes = (nearest[p[0]], *p, nearest[p[-1]])
            segs.append(make_segment(instance, nodes, j))
    covered = frozenset(v for s in segs for v in s.tasks)
    return SegmentSet(tuple(segs), covered, partition)
