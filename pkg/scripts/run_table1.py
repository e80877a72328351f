"""Run the Table-1 style configurations and compare with the reference ILP costs.

Writes the raw bench CSV plus a small summary CSV with the cost ratio against
the published ILP column (first_m depots, integer weights).
"""

import argparse
import csv
import json
import time
from pathlib import Path

from recharge_route.cli import bench_rows, write_csv
from recharge_route.heuristic import heuristic_algorithm
from recharge_route.instance import DepotSelection, build_instance, read_tsplib
from recharge_route.core import validate_walk

ROOT = Path(__file__).resolve().parents[1]
MANIFEST = ROOT / "scripts" / "manifests" / "table1.json"

# (instance, m, D) -> ILP cost reported for that configuration
ILP = {("eil23", 5, 200): 463, ("eil23", 3, 300): 471, ("eil30", 4, 150): 368,
       ("eil30", 8, 80): 363, ("eil51", 5, 100): 443, ("eil51", 10, 50): 491}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results" / "table1.csv"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--skip-262", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    rows = bench_rows(json.loads(MANIFEST.read_text()), MANIFEST.parent, args.jobs)
    with out.open("w") as fh:
        write_csv(rows, fh)

    summary = []
    for r in rows:
        if r["algorithm"] != "heuristic":
            continue
        ref = ILP.get((r["instance"], r["m"], int(r["D"])))
        summary.append({"instance": r["instance"], "m": r["m"], "D": int(r["D"]),
                        "cost": r.get("cost"), "recharges": r.get("recharges"), "ilp": ref,
                        "ratio": round(r["cost"] / ref, 4) if ref and r.get("cost") else "",
                        "feasible": r.get("feasible")})
    if not args.skip_262:
        raw = read_tsplib(ROOT / "data" / "tsplib" / "syn262.tsp")
        inst = build_instance(raw, DepotSelection.parse("first:60"), 150, 0, "int")
        t0 = time.perf_counter()
        walk, rep = heuristic_algorithm(inst)
        secs = time.perf_counter() - t0
        summary.append({"instance": "syn262", "m": 60, "D": 150, "cost": rep.cost,
                        "recharges": rep.recharges, "ilp": "", "ratio": "",
                        "feasible": validate_walk(inst, walk).feasible})
        print(f"syn262: {secs:.2f}s")
    spath = out.with_name(out.stem + "_summary.csv")
    with spath.open("w") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(summary)
    for s in summary:
        print(s)
    print("wrote", out, "and", spath)


if __name__ == "__main__":
    main()
