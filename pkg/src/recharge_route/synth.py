"""Random feasible instances for property tests, benches and scripts."""

from __future__ import annotations

import numpy as np

from .core import build_depot_graph, component_feasibility
from .instance import DepotSelection, WeightMode, build_instance, raw_from_points


def random_points(n: int, rng: np.random.Generator, box: float = 100.0, integer: bool = False):
    pts = rng.uniform(0.0, box, size=(n, 2))
    if integer:
        pts = np.round(pts)
    return [(float(x), float(y)) for x, y in pts]


def random_instance(n_nodes: int, m: int, seed: int, *, D=None, slack=(1.0, 1.8), box: float = 100.0,
                    weight_mode=WeightMode.REAL, T: float = 0.0, name=None):
    """Uniform points in a box, ``m`` random depots, and a D that leaves the instance feasible.

    When ``D`` is None it is drawn as ``2 * Delta * U(slack)`` (Delta = the largest
    nearest-depot distance) and then grown by 15% steps until some depot-graph
    component covers every vertex.
    """
    if not 1 <= m <= n_nodes:
        raise ValueError("need 1 <= m <= n_nodes")
    rng = np.random.default_rng(seed)
    weight_mode = WeightMode.parse(weight_mode)
    pts = random_points(n_nodes, rng, box, integer=weight_mode is WeightMode.INTEGER)
    depots = tuple(sorted(int(i) + 1 for i in rng.choice(n_nodes, size=m, replace=False)))
    raw = raw_from_points(pts, name=name or f"rand{n_nodes}_{m}_{seed}")
    sel = DepotSelection("explicit", ids=depots, seed=seed)
    if D is not None:
        return build_instance(raw, sel, D, T, weight_mode)
    probe = build_instance(raw, sel, 1.0, 0.0, weight_mode)
    tasks = list(probe.task_ids)
    delta = float(probe.dist[np.ix_(tasks, list(probe.depot_ids))].min(axis=1).max()) if tasks else 1.0
    D = max(2 * delta * rng.uniform(*slack), 1.0)
    if weight_mode is WeightMode.INTEGER:
        D = float(np.ceil(D))
    while True:
        inst = build_instance(raw, sel, D, T, weight_mode)
        if any(s.coverable for s in component_feasibility(inst, build_depot_graph(inst))):
            return inst
        D = D * 1.15
        if weight_mode is WeightMode.INTEGER:
            D = float(np.ceil(D))
