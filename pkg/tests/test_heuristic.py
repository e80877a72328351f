import numpy as np
import pytest
from hypothesis import given, strategies as st

from recharge_route.core import build_depot_graph, component_feasibility, validate_walk
from recharge_route.errors import InfeasibleError
from recharge_route.exact import exact_min_length, exact_min_recharges
from recharge_route.heuristic import (HeuristicConfig, bundle_partitions, chains_of, component_tour,
                                      heuristic_algorithm, insert_depots, spanning_forest)
from recharge_route.instance import instance_from_points
from recharge_route.route_approx import tour_cost
from recharge_route.segment_cover import PATH, PartitionScheme, compute_partition, segment_violations
from recharge_route.synth import random_instance

from conftest import assert_valid, line_instance, small_instances


def scheme(t):
    return PartitionScheme(1.0, 1.0, t, tuple((10 + j,) for j in range(t + 1)))


def test_config_validation():
    assert HeuristicConfig(b="3").b == 3
    assert HeuristicConfig(b="AUTO").b == "auto"
    with pytest.raises(ValueError):
        HeuristicConfig(b=0)
    with pytest.raises(ValueError):
        HeuristicConfig(tour_method="lkh")
    with pytest.raises(ValueError):
        HeuristicConfig(k_max=0)


def test_bundles():
    p = scheme(3)
    assert bundle_partitions(p, 4) == [(10, 11, 12, 13)]
    assert bundle_partitions(p, 1) == [(10,), (11,), (12,), (13,)]
    assert bundle_partitions(p, 2) == [(10, 11), (12, 13)]


def test_bundles_with_boundary_and_empty_classes():
    p = PartitionScheme(1.0, 1.0, 2, ((), (5,), ()), boundary=(3,), integer=False)
    assert bundle_partitions(p, 1) == [(3,), (5,)]


def test_spanning_forest():
    d = [[abs(a - b) for b in (0, 1, 2, 7)] for a in (0, 1, 2, 7)]
    assert spanning_forest([0, 1, 2, 3], 1, d) == [(0, 1, 2, 3)]
    assert spanning_forest([0, 1, 2, 3], 2, d) == [(0, 1, 2), (3,)]
    assert spanning_forest([0, 1, 2, 3], 4, d) == [(0,), (1,), (2,), (3,)]
    with pytest.raises(ValueError):
        spanning_forest([0, 1], 3, d)


@pytest.mark.parametrize("method", ["christofides", "nearest_neighbor_2opt"])
def test_component_tour(method):
    pts = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2).tolist()
    assert component_tour([2], method, d) == [2]
    assert component_tour([3, 1], method, d) == [1, 3]
    tour = component_tour([0, 1, 2, 3], method, d)
    assert sorted(tour) == [0, 1, 2, 3]
    assert tour_cost(d, tour) == pytest.approx(4)


def test_insert_depots_single_span():
    inst = line_instance([0, 10, 4, 6], [0, 1], D=20)
    (seg,) = insert_depots([2, 3], inst)
    assert seg.kind == PATH and seg.anchors == (0, 1) and seg.nodes == (0, 2, 3, 1)


def test_insert_depots_detour():
    # depots at 0 and 10, vertices at 4.5 and 15.5: the direct hop leaves no way home,
    # one stop at the depot at 10 fixes it
    inst = line_instance([0, 10, 4.5, 15.5], [0, 1], D=11)
    segs = insert_depots([2, 3], inst)
    assert [s.nodes for s in segs] == [(0, 2, 1), (1, 3, 1)]
    assert len(chains_of(segs)) == 1


def test_insert_depots_split():
    inst = line_instance([0, 10, 20, 30, 1, 31], [0, 1, 2, 3], D=10)
    segs = insert_depots([4, 5], inst)
    assert [s.nodes for s in segs] == [(0, 4, 0), (3, 5, 3)]
    assert len(chains_of(segs)) == 2


def test_insert_depots_rejects_far_vertex():
    inst = line_instance([0, 6], [0], D=10)
    with pytest.raises(InfeasibleError):
        insert_depots([1], inst)


@given(st.integers(0, 10 ** 6), st.integers(4, 40), st.integers(1, 8), st.sampled_from(["int", "real"]))
def test_insert_depots_segments_feasible(seed, n, m, mode):
    inst = random_instance(n, min(m, n - 1), seed, slack=(1.0, 1.2), weight_mode=mode)
    rng = np.random.default_rng(seed)
    tour = list(rng.permutation(list(inst.task_ids)))
    segs = insert_depots(tour, inst)
    assert {v for s in segs for v in s.tasks} == set(inst.task_ids)
    for s in segs:
        assert segment_violations(inst, s) == []


def fig3_instance():
    # two depots; V_0 holds the two vertices at distance 10, V_1 two small clusters
    pts = [(0, 0), (30, 0),
           (0, -10), (6, -8),
           (0, 5), (1, 6), (-1, 6),
           (30, 5), (31, 6), (29, 6)]
    return instance_from_points(pts, [0, 1], D=40, weight_mode="int")


def test_fig3_staging():
    inst = fig3_instance()
    p = compute_partition(inst, [0, 1])
    assert p.t == 1 and p.classes[0] == (2, 3)
    walk, rep = heuristic_algorithm(inst, HeuristicConfig(b=1))
    assert_valid(inst, walk)
    (run,) = rep.diagnostics["widths"]
    assert [c["k"] for c in run["chosen"]] == [1, 2]
    # cycles at one depot are finished before moving to the other
    depots = [v for v in walk.nodes if inst.is_depot[v]]
    switches = sum(1 for a, b in zip(depots, depots[1:]) if a != b)
    assert switches == 1


def test_fits_one_segment_any_b():
    # every vertex in one class, so even b=1 tours them together
    inst = instance_from_points([(0, 0), (3, 4), (4, 3), (5, 0), (0, 5)], [0], D=40)
    assert len(bundle_partitions(compute_partition(inst, [0]), 1)) == 1
    for b in ("auto", 1, 2, 5):
        walk, rep = heuristic_algorithm(inst, HeuristicConfig(b=b))
        assert rep.recharges == 1


@given(small_instances(max_tasks=50, max_depots=10) | small_instances(max_tasks=50, max_depots=10, mode="int"))
def test_heuristic_valid_and_in_one_component(inst):
    walk, rep = heuristic_algorithm(inst)
    assert_valid(inst, walk)
    dg = build_depot_graph(inst)
    assert len({dg.component_of(v) for v in walk.nodes if inst.is_depot[v]}) == 1


@given(small_instances(max_tasks=40, max_depots=8))
def test_auto_no_worse_than_fixed_b(inst):
    _, auto = heuristic_algorithm(inst)
    dg = build_depot_graph(inst)
    t = max(compute_partition(inst, s.component).t
            for s in component_feasibility(inst, dg) if s.coverable)
    for b in range(1, t + 2):
        _, fixed = heuristic_algorithm(inst, HeuristicConfig(b=b))
        assert auto.recharges <= fixed.recharges


@given(small_instances(max_tasks=40, max_depots=8))
def test_sweep_keeps_fewest_recharges(inst):
    _, rep = heuristic_algorithm(inst)
    for run in rep.diagnostics["widths"]:
        for choice in run["chosen"]:
            rows = [r for r in run["sweep"] if r["bundle_index"] == choice["bundle_index"]]
            assert choice["recharges"] == min(r["recharges"] for r in rows)
            best = min(rows, key=lambda r: (r["recharges"], r["cost"], r["k"]))
            assert best["k"] == choice["k"]


@given(small_instances(max_tasks=6, max_depots=3))
def test_heuristic_vs_oracle(inst):
    _, rep = heuristic_algorithm(inst)
    _, opt = exact_min_length(inst)
    _, fewest = exact_min_recharges(inst)
    assert rep.cost >= opt.cost - inst.tol
    assert rep.recharges >= fewest.recharges


def test_tour_method_and_kmax():
    inst = random_instance(40, 5, 3)
    for cfg in (HeuristicConfig(tour_method="nearest_neighbor_2opt"), HeuristicConfig(k_max=2)):
        walk, _ = heuristic_algorithm(inst, cfg)
        assert_valid(inst, walk)
    _, rep = heuristic_algorithm(inst, HeuristicConfig(k_max=2))
    assert max(r["k"] for run in rep.diagnostics["widths"] for r in run["sweep"]) <= 2


def test_time_budget_still_valid():
    inst = random_instance(80, 8, 5)
    walk, rep = heuristic_algorithm(inst, HeuristicConfig(time_budget=0.0))
    assert validate_walk(inst, walk).feasible
    assert rep.diagnostics["truncated"]


def test_heuristic_deterministic():
    inst = random_instance(50, 6, 17)
    a, ra = heuristic_algorithm(inst)
    b, rb = heuristic_algorithm(inst)
    assert a == b and ra.cost == rb.cost
