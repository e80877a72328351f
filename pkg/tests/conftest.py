import itertools
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from recharge_route.core import validate_walk, walk_cost, Walk
from recharge_route.instance import instance_from_points
from recharge_route.synth import random_instance

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "tsplib"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def data_dir():
    return DATA


def line_instance(xs, depots, D, **kw):
    """Points on the x axis; ``depots`` are 0-based indices."""
    return instance_from_points([(float(x), 0.0) for x in xs], depots, D, **kw)


@st.composite
def small_instances(draw, max_tasks=6, max_depots=3, mode="real"):
    m = draw(st.integers(1, max_depots))
    n_tasks = draw(st.integers(1, max_tasks))
    seed = draw(st.integers(0, 10 ** 6))
    return random_instance(n_tasks + m, m, seed, weight_mode=mode)


def assert_valid(instance, walk):
    verdict = validate_walk(instance, walk)
    assert verdict.feasible, verdict.reason
    return verdict


def brute_force_best(instance, objective="length"):
    """Enumerate visit orders with 0, 1 or 2 depot stops between consecutive tasks.

    Only valid when every pair of depots is at most D apart: any longer run of
    depots can then be shortcut to two of them without breaking feasibility.
    """
    tasks = list(instance.task_ids)
    depots = list(instance.depot_ids)
    d = instance.d
    D = instance.D
    gaps = [()] + [(q,) for q in depots] + [(a, b) for a in depots for b in depots if a != b]
    best = None
    for perm in itertools.permutations(tasks):
        for start in depots:
            for end in depots:
                for fills in itertools.product(gaps, repeat=len(perm) - 1):
                    nodes = [start, perm[0]]
                    for f, v in zip(fills, perm[1:]):
                        nodes.extend(f)
                        nodes.append(v)
                    nodes.append(end)
                    acc, ok = 0.0, True
                    for a, b in zip(nodes, nodes[1:]):
                        acc += d[a][b]
                        if instance.is_depot[b]:
                            if acc > D + instance.tol:
                                ok = False
                                break
                            acc = 0.0
                    if not ok:
                        continue
                    cost, rech = walk_cost(instance, Walk.from_nodes(instance, nodes))
                    key = (cost, rech) if objective == "length" else (rech, cost)
                    if best is None or key < best:
                        best = key
    return best


ACCEPTANCE = {}


def report(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
