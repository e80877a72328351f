"""Gap statistics of both solvers against the exact oracle on small random instances."""

import argparse
import statistics

from recharge_route.exact import exact_min_length, exact_min_recharges
from recharge_route.heuristic import heuristic_algorithm
from recharge_route.route_approx import approximation_algorithm
from recharge_route.synth import random_instance


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--max-tasks", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    gaps = {"heuristic": [], "approx": []}
    extra_recharges = {"heuristic": [], "approx": []}
    for i in range(args.count):
        seed = args.seed + i
        m = 1 + seed % 3
        n = m + 2 + seed % (args.max_tasks - 1)
        inst = random_instance(n, m, seed)
        _, opt = exact_min_length(inst)
        _, optr = exact_min_recharges(inst)
        for name, solver in (("heuristic", heuristic_algorithm), ("approx", approximation_algorithm)):
            _, rep = solver(inst)
            gaps[name].append(rep.cost / opt.cost - 1 if opt.cost > 0 else 0.0)
            extra_recharges[name].append(rep.recharges - optr.recharges)
    for name in gaps:
        g = gaps[name]
        print(f"{name:10s} mean gap {statistics.mean(g):.3f}  median {statistics.median(g):.3f}  "
              f"max {max(g):.3f}  mean extra recharges {statistics.mean(extra_recharges[name]):.2f}")


if __name__ == "__main__":
    main()
