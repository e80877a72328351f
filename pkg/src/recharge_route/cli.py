"""Command-line front end: ``solve``, ``bench`` and ``plot``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .core import dumps_walk, make_report, validate_walk, walk_from_json
from .errors import InfeasibleError, SearchTimeout, ValidationError
from .exact import SearchLimits, exact_min_length, exact_min_recharges
from .heuristic import HeuristicConfig, heuristic_algorithm
from .instance import (DepotSelection, InstanceConfig, build_instance, load_config, read_tsplib)
from .plot import render_svg
from .route_approx import approximation_algorithm
from .synth import random_instance

log = logging.getLogger("recharge_route")

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_TIMEOUT = 4

ALGORITHMS = ("approx", "heuristic", "exact", "exact_recharges")

CSV_FIELDS = ["instance", "m", "D", "strategy", "seed", "algorithm", "cost", "recharges",
              "runtime_ms", "feasible", "gap_vs_exact", "status"]


def configure_logging():
    level = os.environ.get("RECHARGE_ROUTE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING) if not level.isdigit()
                        else int(level), format="%(levelname)s %(name)s: %(message)s")


def run_algorithm(instance, algo: str, b="auto", k_max=None, timeout=None, tour="christofides",
                  max_vertices: int = 10):
    if algo == "approx":
        return approximation_algorithm(instance)
    if algo == "heuristic":
        cfg = HeuristicConfig(b=b, k_max=k_max, tour_method=tour, time_budget=timeout)
        return heuristic_algorithm(instance, cfg)
    limits = SearchLimits(max_vertices=max_vertices, time_budget=timeout)
    if algo == "exact":
        return exact_min_length(instance, limits)
    if algo == "exact_recharges":
        return exact_min_recharges(instance, limits)
    raise ValueError(f"unknown algorithm {algo!r}")


def _instance_from_args(args):
    if args.config:
        cfg = load_config(Path(args.config).read_text())
        return cfg.build(base_dir=Path(args.config).parent)
    if not args.file or args.D is None:
        raise ValidationError("either --config or both --file and --D are required")
    raw = read_tsplib(args.file)
    return build_instance(raw, DepotSelection.parse(args.depots, seed=args.seed), args.D,
                          args.T, args.weights)


def _add_instance_args(p):
    p.add_argument("--file", help="TSPLIB .tsp/.vrp file")
    p.add_argument("--config", help="instance config (JSON or key=value)")
    p.add_argument("--depots", default="first:1",
                   help="first:m | farthest:m | explicit:id,id,... (default first:1)")
    p.add_argument("--D", type=float, help="battery discharge time")
    p.add_argument("--T", type=float, default=0.0, help="recharge time (default 0)")
    p.add_argument("--weights", choices=["int", "real"], default="real")
    p.add_argument("--seed", type=int, default=0)


def cmd_solve(args) -> int:
    try:
        instance = _instance_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        walk, report = run_algorithm(instance, args.algo, args.b, args.kmax, args.timeout,
                                     args.tour, args.max_vertices)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except SearchTimeout as exc:
        print(f"timeout: {exc} (lower bound {exc.lower_bound})")
        return EXIT_TIMEOUT
    # independent re-validation before anything is reported as feasible
    verdict = validate_walk(instance, walk)
    report.feasible = verdict.feasible
    report.violation = None if verdict.feasible else verdict.reason
    print(report.summary())
    if args.out:
        Path(args.out).write_text(dumps_walk(instance, walk, args.algo))
    if args.plot:
        Path(args.plot).write_text(render_svg(instance, walk))
    if args.diagnostics:
        Path(args.diagnostics).write_text(json.dumps(report.diagnostics, indent=1, default=str))
    return EXIT_OK if verdict.feasible else EXIT_INVALID


# -- bench -------------------------------------------------------------------

def _manifest_jobs(manifest: dict, base: Path) -> list:
    jobs = []
    for run in manifest.get("runs", []):
        algos = run.get("algorithms", ["heuristic"])
        seeds = run.get("seeds", [0])
        common = {"algorithms": algos, "timeout": run.get("timeout"),
                  "b": run.get("b", "auto"), "k_max": run.get("kmax"),
                  "weights": run.get("weights", "real"), "T": run.get("T", 0.0)}
        for seed in seeds:
            if "generate" in run:
                g = run["generate"]
                jobs.append({**common, "kind": "generate", "n": g["n"], "m": g["m"],
                             "D": g.get("D"), "seed": seed, "strategy": "random"})
            else:
                path = Path(run["file"])
                if not path.is_absolute():
                    path = base / path
                strategy = run.get("strategy", "first")
                spec = (f"explicit:{','.join(map(str, run['depot_list']))}"
                        if strategy == "explicit" else f"{strategy}:{run['m']}")
                jobs.append({**common, "kind": "file", "file": str(path), "depots": spec,
                             "m": run.get("m", len(run.get("depot_list", []))), "D": run["D"],
                             "seed": seed, "strategy": spec})
    return jobs


def _fmt_num(x) -> str:
    return "" if x is None else f"{x:.6f}"


def run_bench_job(job: dict) -> list:
    """All rows for one manifest instance (exact first so gaps can be filled in)."""
    try:
        if job["kind"] == "generate":
            inst = random_instance(job["n"], job["m"], job["seed"], D=job["D"],
                                   weight_mode=job["weights"], T=job["T"])
        else:
            inst = build_instance(read_tsplib(job["file"]),
                                  DepotSelection.parse(job["depots"], seed=job["seed"]),
                                  job["D"], job["T"], job["weights"])
        name, D = inst.name, inst.D_original
    except Exception as exc:  # recorded in the CSV, the run continues
        name = Path(job.get("file", "generated")).stem
        return [{"instance": name, "m": job["m"], "D": job["D"], "strategy": job["strategy"],
                 "seed": job["seed"], "algorithm": a, "status": f"error: {exc}"}
                for a in job["algorithms"]]
    algos = sorted(job["algorithms"], key=lambda a: a != "exact")
    results, exact_cost = {}, None
    for algo in algos:
        row = {"instance": name, "m": len(inst.depot_ids), "D": D, "strategy": job["strategy"],
               "seed": job["seed"], "algorithm": algo}
        try:
            walk, report = run_algorithm(inst, algo, job["b"], job["k_max"], job["timeout"])
            verdict = validate_walk(inst, walk)
            row.update(cost=report.cost, recharges=report.recharges, runtime_ms=report.runtime_ms,
                       feasible=verdict.feasible, status="ok" if verdict.feasible else "invalid")
            if algo == "exact" and verdict.feasible:
                exact_cost = report.cost
        except InfeasibleError as exc:
            row.update(feasible=False, status=f"infeasible: {exc}")
        except SearchTimeout:
            row.update(feasible=False, status="timeout")
        except Exception as exc:
            row.update(feasible=False, status=f"error: {exc}")
        results[algo] = row
    rows = []
    for algo in job["algorithms"]:
        row = results[algo]
        if exact_cost is not None and row.get("cost") is not None and exact_cost > 0:
            row["gap_vs_exact"] = (row["cost"] - exact_cost) / exact_cost
        elif exact_cost is not None and row.get("cost") is not None:
            row["gap_vs_exact"] = 0.0
        rows.append(row)
    return rows


def bench_rows(manifest: dict, base: Path = Path("."), jobs: int = 1) -> list:
    work = _manifest_jobs(manifest, base)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(run_bench_job, work))  # map keeps manifest order
    else:
        chunks = [run_bench_job(j) for j in work]
    return [row for chunk in chunks for row in chunk]


def write_csv(rows: list, stream, timing: bool = True):
    w = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    gaps = {}
    for row in rows:
        out = {k: row.get(k, "") for k in CSV_FIELDS}
        out["D"] = _fmt_num(row.get("D")) if row.get("D") is not None else ""
        out["cost"] = _fmt_num(row.get("cost"))
        out["runtime_ms"] = (_fmt_num(row.get("runtime_ms")) if timing else
                             ("" if row.get("runtime_ms") is None else "-"))
        out["gap_vs_exact"] = _fmt_num(row.get("gap_vs_exact"))
        if "feasible" in row:
            out["feasible"] = str(bool(row["feasible"])).lower()
        w.writerow(out)
        if row.get("gap_vs_exact") is not None and row["algorithm"] != "exact":
            gaps.setdefault(row["algorithm"], []).append(row["gap_vs_exact"])
    for algo in sorted(gaps):
        vals = gaps[algo]
        w.writerow({**{k: "" for k in CSV_FIELDS}, "instance": "MEAN", "algorithm": algo,
                    "gap_vs_exact": _fmt_num(sum(vals) / len(vals)),
                    "status": f"n={len(vals)}"})


def cmd_bench(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(manifest, list):
        manifest = {"runs": manifest}
    rows = bench_rows(manifest, Path(args.manifest).parent, args.jobs)
    buf = io.StringIO()
    write_csv(rows, buf, timing=not args.no_timing)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        instance = _instance_from_args(args)
        walk = walk_from_json(Path(args.walk).read_text()) if args.walk else None
        svg = render_svg(instance, walk)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        Path(args.out).write_text(svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recharge-route",
                                     description="Multi-depot recharging TSP solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _add_instance_args(p)
    p.add_argument("--algo", choices=ALGORITHMS, default="heuristic")
    p.add_argument("--b", default="auto", help="bundling width: auto or an integer")
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--tour", choices=["christofides", "nearest_neighbor_2opt"],
                   default="christofides")
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.add_argument("--max-vertices", type=int, default=10, help="exact search size limit")
    p.add_argument("--out", help="write Walk JSON here")
    p.add_argument("--plot", help="write an SVG plot here")
    p.add_argument("--diagnostics", help="write stage diagnostics JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark manifest and emit CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="blank out wall-clock columns (byte-reproducible CSV)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render an instance and optional walk as SVG")
    _add_instance_args(p)
    p.add_argument("--walk", help="Walk JSON produced by solve --out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[list] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
