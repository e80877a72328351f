"""Write data/tsplib/syn262.tsp: 262 integer points, a stand-in for the 262-node CVRP set.

The real coordinates are not shipped here, so the scale instance is synthetic:
uniform integer points in a 220x220 box (about the spread of the original).
"""

import argparse
from pathlib import Path

import numpy as np

from recharge_route.instance import raw_from_points, serialize_tsplib

ROOT = Path(__file__).resolve().parents[1]


def make(seed=262, n=262, box=220):
    rng = np.random.default_rng(seed)
    pts = np.round(rng.uniform(0, box, size=(n, 2)))
    raw = raw_from_points([(float(x), float(y)) for x, y in pts], name="syn262", exact=False)
    return serialize_tsplib(raw)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=262)
    ap.add_argument("--out", default=str(ROOT / "data" / "tsplib" / "syn262.tsp"))
    args = ap.parse_args()
    Path(args.out).write_text(make(args.seed))
    print("wrote", args.out)
