"""Command-line runner: execute scenarios, aggregate metrics, plot, bench.

    gpfrontier run --scenario MD --seeds 10 --out runs/
    gpfrontier run --scenario SU --method gpf-distance-only --seed 3
    gpfrontier bench --scenario MD --seed 0

Outputs per seed: a trajectory CSV (schema ``t,x,y,heading,v,w,r_min,
frontier_theta,frontier_r,cost``); per run: an aggregated metrics CSV and a
static SVG plot. ``run`` exits 0 only when every seed reaches the goal.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import metrics as metrics_mod
from . import sim

METHODS = ("gpf", "gpf-distance-only")


def _parse_set(pairs: list[str]) -> dict[str, object]:
    out = {}
    for raw in pairs:
        key, sep, value = raw.partition("=")
        if not sep or not key:
            raise sim.ScenarioError(f"--set expects key=value, got {raw!r}")
        out[key] = yaml.safe_load(value)
    return out


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("GPFRONTIER_OUT", "runs"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve(args) -> tuple[sim.Scenario, dict]:
    overrides = _parse_set(args.set or [])
    if args.method == "gpf-distance-only":
        overrides["nav.k_dir"] = 0.0
    return sim.load_scenario(args.scenario, overrides), overrides


def _seed_list(args) -> list[int]:
    if args.seed is not None:
        return [args.seed]
    return list(range(args.seeds))


def _run_seed(scenario: sim.Scenario, seed: int) -> metrics_mod.TrajectoryLog:
    return sim.run_scenario(scenario, seed=seed)


def _run_all(scenario, seeds, workers) -> list[metrics_mod.TrajectoryLog]:
    if workers <= 1 or len(seeds) <= 1:
        return [_run_seed(scenario, s) for s in seeds]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futs = {pool.submit(_run_seed, scenario, s): s for s in seeds}
        done = {futs[f]: f.result() for f in concurrent.futures.as_completed(futs)}
    return [done[s] for s in seeds]


def _flag(log) -> str:
    if log.success:
        return "success"
    return "collision" if log.collided else "timeout"


def plot_runs(scenario: sim.Scenario, logs, path: Path, method: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib import patches

    fig, ax = plt.subplots(figsize=(7, 7))
    for ob in scenario.world.obstacles:
        if isinstance(ob, sim.Rect):
            ax.add_patch(
                patches.Rectangle(
                    (ob.x0, ob.y0), ob.x1 - ob.x0, ob.y1 - ob.y0,
                    facecolor="0.75", edgecolor="0.4",
                )
            )
        else:
            ax.add_patch(
                patches.Circle((ob.cx, ob.cy), ob.radius,
                               facecolor="0.75", edgecolor="0.4")
            )
    for log in logs:
        (line,) = ax.plot(log.x, log.y, lw=1.2, label=f"seed {log.seed} ({_flag(log)})")
        # Selected frontiers, reconstructed from the log, one marker every ~2 s.
        step = max(1, int(round(2.0 * scenario.physics_hz)))
        idx = np.arange(0, len(log), step)
        ft, fr = log.frontier_theta[idx], log.frontier_r[idx]
        ok = np.isfinite(ft)
        if np.any(ok):
            hx = log.x[idx][ok] + fr[ok] * np.cos(log.heading[idx][ok] + ft[ok])
            hy = log.y[idx][ok] + fr[ok] * np.sin(log.heading[idx][ok] + ft[ok])
            ax.scatter(hx, hy, s=8, marker="x", color=line.get_color(), alpha=0.6)
    ax.plot(*scenario.start[:2], "g^", ms=10, label="start")
    ax.plot(*scenario.goal, "r*", ms=14, label="goal")
    x0, x1, y0, y1 = scenario.world.bounds
    ax.set_xlim(x0 - 0.5, x1 + 0.5)
    ax.set_ylim(y0 - 0.5, y1 + 0.5)
    ax.set_aspect("equal")
    ax.set_title(f"{scenario.name} / {method}")
    ax.legend(fontsize=7, loc="upper left")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def cmd_run(args) -> int:
    scenario, _ = _resolve(args)
    out = _out_dir(args)
    seeds = _seed_list(args)
    logs = _run_all(scenario, seeds, args.workers)

    rows = []
    reports = []
    for log in logs:
        log.to_csv(out / f"{scenario.name}_{args.method}_seed{log.seed}.csv")
        rep = metrics_mod.compute_metrics(log)
        reports.append(rep)
        row = {"scenario": scenario.name, "method": args.method, "seed": log.seed,
               "outcome": _flag(log)}
        row.update({k: f"{getattr(rep, k):.6g}" for k in metrics_mod.MetricsReport.FIELDS})
        rows.append(row)
        print(f"{scenario.name} seed {log.seed}: {_flag(log)}, "
              f"t={rep.t_tot:.1f}s d={rep.d_acc:.2f}m")
    agg = metrics_mod.aggregate(reports)
    for stat in ("mean", "std"):
        row = {"scenario": scenario.name, "method": args.method, "seed": stat,
               "outcome": f"{100 * agg['success_rate']:.0f}% success"}
        row.update({k: f"{agg[f'{k}_{stat}']:.6g}" for k in metrics_mod.MetricsReport.FIELDS})
        rows.append(row)
    metrics_mod.write_metrics_csv(out / f"{scenario.name}_{args.method}_metrics.csv", rows)
    print(metrics_mod.report_table(reports, label=f"{scenario.name}/{args.method}"))

    if args.plot:
        plot_runs(scenario, logs, out / f"{scenario.name}_{args.method}.svg", args.method)
    return 0 if all(log.success for log in logs) else 1


def cmd_bench(args) -> int:
    scenario, _ = _resolve(args)
    out = _out_dir(args)
    seeds = [args.seed if args.seed is not None else 0]
    rows = []
    for seed in seeds:
        log = sim.run_scenario(scenario, seed=seed)
        row = {
            "scenario": scenario.name,
            "seed": seed,
            "scans": len(log.fit_ms),
            "n_train_p50": int(np.percentile(log.train_sizes, 50)),
            "n_train_max": int(log.train_sizes.max()),
            "fit_ms_p50": f"{np.percentile(log.fit_ms, 50):.2f}",
            "fit_ms_p95": f"{np.percentile(log.fit_ms, 95):.2f}",
            "predict_ms_p50": f"{np.percentile(log.predict_ms, 50):.2f}",
            "predict_ms_p95": f"{np.percentile(log.predict_ms, 95):.2f}",
            "outcome": _flag(log),
        }
        rows.append(row)
        print(" ".join(f"{k}={v}" for k, v in row.items()))
    metrics_mod.write_metrics_csv(out / f"{scenario.name}_bench.csv", rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpfrontier",
        description="Mapless local navigation on sparse-GP occupancy surfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("bench", cmd_bench)):
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True,
                       help="built-in name (MD, X, SU, CU, GU) or a YAML path")
        p.add_argument("--method", choices=METHODS, default="gpf")
        p.add_argument("--seeds", type=int, default=10,
                       help="run seeds 0..N-1 (default 10)")
        p.add_argument("--seed", type=int, default=None,
                       help="run exactly this one seed")
        p.add_argument("--out", default=None,
                       help="output directory (default $GPFRONTIER_OUT or ./runs)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any scenario value, e.g. nav.k_dir=0")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except sim.ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
