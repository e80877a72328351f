"""Regenerate the golden files under tests/golden (run after an intended output change)."""

import io
import json
from pathlib import Path

from recharge_route.cli import bench_rows, write_csv
from recharge_route.heuristic import HeuristicConfig, heuristic_algorithm
from recharge_route.instance import instance_from_points
from recharge_route.plot import render_svg

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"

# two depots, a far pair (class 0) and one small cluster per depot (class 1)
STAGED_POINTS = [(0, 0), (30, 0), (0, -10), (6, -8), (0, 5), (1, 6), (-1, 6),
                 (30, 5), (31, 6), (29, 6)]
BENCH_MANIFEST = {"runs": [{"generate": {"n": 7, "m": 2}, "seeds": [0, 1, 2],
                            "algorithms": ["exact", "heuristic", "approx"]}]}


def staged_instance():
    return instance_from_points(STAGED_POINTS, [0, 1], D=40, weight_mode="int", name="staged")


def golden_svg() -> str:
    inst = staged_instance()
    walk, _ = heuristic_algorithm(inst, HeuristicConfig(b=1))
    return render_svg(inst, walk)


def golden_csv() -> str:
    buf = io.StringIO()
    write_csv(bench_rows(BENCH_MANIFEST), buf, timing=False)
    return buf.getvalue()


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    (GOLDEN / "staged_walk.svg").write_text(golden_svg())
    (GOLDEN / "bench_small.csv").write_text(golden_csv())
    (GOLDEN / "bench_small.json").write_text(json.dumps(BENCH_MANIFEST, indent=2) + "\n")
    print("golden files written to", GOLDEN)
