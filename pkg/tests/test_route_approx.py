import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from recharge_route.core import build_depot_graph, collapse, component_feasibility, walk_cost
from recharge_route.errors import ValidationError
from recharge_route.exact import exact_min_length, exact_tsp
from recharge_route.instance import instance_from_points, metric_completion
from recharge_route.route_approx import (NeighborSet, approximation_algorithm, build_segment_graph,
                                         christofides_tsp, count_recharges, group_neighbor_sets,
                                         is_metric, open_path_order, tour_cost, traverse_neighbor_set)
from recharge_route.segment_cover import make_segment, min_segment_cover
from recharge_route.synth import random_instance

from conftest import assert_valid, line_instance, small_instances


def depot_line(n_depots, spacing, tasks, D):
    xs = [i * spacing for i in range(n_depots)] + list(tasks)
    return line_instance(xs, list(range(n_depots)), D=D)


def cover_and_sets(inst):
    dg = build_depot_graph(inst)
    comp = [s.component for s in component_feasibility(inst, dg) if s.coverable][0]
    segs = list(min_segment_cover(inst, comp).segments)
    return dg, segs, group_neighbor_sets(segs, dg)


def legs_within_D(inst, nodes):
    acc = 0.0
    for a, b in zip(nodes, nodes[1:]):
        acc += inst.d[a][b]
        if inst.is_depot[b]:
            if not inst.leq(acc, inst.D):
                return False
            acc = 0.0
    return True


def test_shared_anchor_one_set():
    inst = line_instance([0, 2, -2], [0], D=10)
    dg = build_depot_graph(inst)
    segs = [make_segment(inst, (0, 1, 0)), make_segment(inst, (0, 2, 0))]
    assert [s.segments for s in group_neighbor_sets(segs, dg)] == [(0, 1)]


def test_two_hops_one_set():
    inst = depot_line(3, 10, [1, 21], D=10)
    dg = build_depot_graph(inst)
    segs = [make_segment(inst, (0, 3, 0)), make_segment(inst, (2, 4, 2))]
    assert dg.hop_dist(0, 2) == 2
    assert len(group_neighbor_sets(segs, dg)) == 1


def test_three_hops_two_sets():
    inst = depot_line(4, 10, [1, 31], D=10)
    dg, segs, nsets = cover_and_sets(inst)
    assert len(segs) == 2 and len(nsets) == 2
    g = build_segment_graph(nsets, dg, inst)
    assert g.weights[0][1] == 3
    assert g.edges() == [(0, 1, 3)]


def test_single_set_graph():
    inst = line_instance([0, 2], [0], D=10)
    dg, segs, nsets = cover_and_sets(inst)
    g = build_segment_graph(nsets, dg, inst)
    assert g.n == 1 and g.edges() == []


def test_chain_of_three_sets():
    inst = depot_line(7, 10, [1, 31, 61], D=10)
    dg, segs, nsets = cover_and_sets(inst)
    g = build_segment_graph(nsets, dg, inst)
    W = np.array(g.weights)
    assert W.tolist() == [[0, 3, 6], [3, 0, 3], [6, 3, 0]]
    assert is_metric(W)


def test_sets_in_different_components():
    inst = line_instance([0, 100, 1, 101], [0, 1], D=10)
    dg = build_depot_graph(inst)
    nsets = [NeighborSet(0, (0,), (0,)), NeighborSet(1, (1,), (1,))]
    with pytest.raises(ValidationError):
        build_segment_graph(nsets, dg)


@given(small_instances(max_tasks=40, max_depots=10))
def test_neighbor_sets_maximal(inst):
    dg = build_depot_graph(inst)
    for st_ in component_feasibility(inst, dg):
        if not st_.coverable:
            continue
        segs = list(min_segment_cover(inst, st_.component).segments)
        nsets = group_neighbor_sets(segs, dg)
        assert sorted(i for s in nsets for i in s.segments) == list(range(len(segs)))
        for a, b in itertools.combinations(nsets, 2):
            for qa in a.depots:
                for qb in b.depots:
                    assert dg.hop_dist(qa, qb) >= 3
        if len(nsets) > 1:
            g = build_segment_graph(nsets, dg, inst)
            assert min(w for _, _, w in g.edges()) >= 3


def test_christofides_trivial():
    assert christofides_tsp([[0]]) == [0]
    w = [[0, 7], [7, 0]]
    assert tour_cost(w, christofides_tsp(w)) == 14


def test_christofides_unit_square():
    pts = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    w = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    tour = christofides_tsp(w)
    assert sorted(tour) == [0, 1, 2, 3]
    assert tour_cost(w, tour) == pytest.approx(4)
    assert exact_tsp(w)[1] == pytest.approx(4)


def test_christofides_rejects_non_metric():
    w = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(ValidationError):
        christofides_tsp(w)


@given(st.integers(3, 8), st.integers(0, 10 ** 6), st.booleans())
def test_christofides_ratio(n, seed, euclid):
    rng = np.random.default_rng(seed)
    if euclid:
        pts = rng.uniform(0, 100, size=(n, 2))
        w = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    else:
        w = rng.integers(1, 10, size=(n, n)).astype(float)
        w = metric_completion(np.triu(w, 1) + np.triu(w, 1).T)
    tour = christofides_tsp(w)
    assert sorted(tour) == list(range(n)) and tour[0] == 0
    assert tour_cost(w, tour) <= 1.5 * exact_tsp(w)[1] + 1e-9


def test_christofides_greedy_matching_large():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 100, size=(60, 2))
    w = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    info = {}
    tour = christofides_tsp(w, info=info)
    assert sorted(tour) == list(range(60))
    assert info["matching"] in ("exact", "greedy")


def test_open_path_drops_heaviest_edge():
    w = [[0, 1, 9, 1], [1, 0, 1, 9], [9, 1, 0, 1], [1, 9, 1, 0]]
    assert open_path_order([[0, 1, 5], [1, 0, 1], [5, 1, 0]], [0, 1, 2]) == [0, 1, 2]
    assert len(open_path_order(w, [0, 1, 2, 3])) == 4


def test_traverse_single_cycle():
    inst = line_instance([0, 2, 3], [0], D=10)
    dg = build_depot_graph(inst)
    segs = [make_segment(inst, (0, 1, 2, 0))]
    (nset,) = group_neighbor_sets(segs, dg)
    nodes = traverse_neighbor_set(inst, dg, segs, nset, 0)
    assert nodes == [0, 1, 2, 0]
    assert count_recharges(inst, nodes) == 1


def test_traverse_two_parallel_paths():
    inst = instance_from_points([(0, 0), (10, 0), (5, 2), (5, -2)], [0, 1], D=12)
    dg = build_depot_graph(inst)
    segs = [make_segment(inst, (0, 2, 1)), make_segment(inst, (0, 3, 1))]
    (nset,) = group_neighbor_sets(segs, dg)
    nodes = traverse_neighbor_set(inst, dg, segs, nset, 0)
    assert sum(inst.is_depot[v] for v in nodes) <= 4
    assert {2, 3} <= set(nodes) and nodes[0] == nodes[-1] == 0
    assert legs_within_D(inst, nodes)


def test_traverse_exit_depot():
    inst = depot_line(3, 10, [1, 11, 21], D=10)
    dg, segs, nsets = cover_and_sets(inst)
    (nset,) = nsets
    nodes = traverse_neighbor_set(inst, dg, segs, nset, 0, exit_depot=2)
    assert nodes[0] == 0 and nodes[-1] == 2
    assert {3, 4, 5} <= set(nodes)


@given(st.integers(0, 10 ** 6), st.integers(10, 60), st.integers(2, 12),
       st.sampled_from(["int", "real"]))
def test_traverse_recharge_bound(seed, n, m, mode):
    inst = random_instance(n, min(m, n - 1), seed, slack=(1.0, 1.3), weight_mode=mode)
    dg, segs, nsets = cover_and_sets(inst)
    for nset in nsets:
        for entry in (nset.depots[0], nset.depots[-1]):
            nodes = traverse_neighbor_set(inst, dg, segs, nset, entry)
            covered = {v for i in nset.segments for v in segs[i].tasks}
            assert covered <= set(nodes)
            assert legs_within_D(inst, nodes)
            assert nodes[0] == entry == nodes[-1]
            assert count_recharges(inst, nodes) <= 6 * len(nset.segments)


def test_single_segment_instance():
    inst = instance_from_points([(0, 0), (3, 4), (4, 3)], [0], D=20)
    walk, rep = approximation_algorithm(inst)
    assert collapse(walk.nodes) in ([0, 1, 2, 0], [0, 2, 1, 0])
    assert rep.recharges == 1 and rep.feasible


def test_two_cluster_instance():
    pts = [(0, 0), (40, 0), (2, 3), (-3, 1), (1, -2), (42, 2), (38, -3), (41, 3)]
    inst = instance_from_points(pts, [0, 1], D=45)
    walk, rep = approximation_algorithm(inst)
    assert_valid(inst, walk)
    depots_seen = [v for v in walk.nodes if inst.is_depot[v]]
    assert {0, 1} <= set(depots_seen)
    assert {"segments", "neighbor_sets", "gs_edges", "tsp_order", "per_set"} <= set(rep.diagnostics)


@given(small_instances(max_tasks=50, max_depots=10) | small_instances(max_tasks=50, max_depots=10, mode="int"))
def test_approx_walks_valid_and_in_one_component(inst):
    walk, rep = approximation_algorithm(inst)
    assert_valid(inst, walk)
    assert rep.feasible
    dg = build_depot_graph(inst)
    comps = {dg.component_of(v) for v in walk.nodes if inst.is_depot[v]}
    assert len(comps) == 1
    for row in rep.diagnostics.get("per_set", []):
        assert row["recharges"] <= 6 * row["size"]


@given(small_instances(max_tasks=6, max_depots=3))
def test_approx_vs_oracle(inst):
    walk, rep = approximation_algorithm(inst)
    _, opt = exact_min_length(inst)
    assert rep.cost >= opt.cost - inst.tol
    assert rep.cost <= 4 * 6 * max(math.ceil(math.log2(inst.D)), 1) * opt.cost + inst.tol


def test_approx_no_tasks():
    inst = line_instance([0, 5], [0, 1], D=10)
    walk, rep = approximation_algorithm(inst)
    assert walk.nodes == [0] and rep.cost == 0 and rep.recharges == 0


def test_approx_deterministic():
    inst = random_instance(40, 6, 11)
    a, _ = approximation_algorithm(inst)
    b, _ = approximation_algorithm(inst)
    assert a == b
    assert walk_cost(inst, a) == walk_cost(inst, b)
