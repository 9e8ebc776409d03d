"""Command-line harness wiring simulator -> integrator -> tracker -> evaluation.

Subcommands:
  simulate   write scan and ground-truth files for one seed
  track      run one tracker over a scan file, write the trajectory
  sweep      run the full methods x integration grid over all seeds
  plotdata   reduce a results file to boxplot-ready records

Exit codes: 0 success, 1 usage, 2 input parse, 3 runtime failure.
"""

import argparse
import dataclasses
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as tio
from .config import ConfigError, RunConfig, default_config, load_config
from .evaluate import EmptyOverlapError, evaluate_ape
from .frames import frame_stream
from .io import FileFormatError, ResultRow
from .simulate import gen_ground_truth, simulate_scans
from .tracking import track

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1 here
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="uavtrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate scan + ground-truth files")
    sim.add_argument("--config", type=Path, help="config file (defaults built in)")
    sim.add_argument("--out", type=Path, help="output directory")
    sim.add_argument("--seed", type=int, help="override the first configured seed")

    trk = sub.add_parser("track", help="track one scan file")
    trk.add_argument("--scans", type=Path, required=True)
    trk.add_argument("--gt", type=Path, required=True, help="ground truth (initial position)")
    trk.add_argument("--method", choices=("kf", "ekf", "cv"), required=True)
    trk.add_argument("--integration", type=int, required=True, help="scans per frame")
    trk.add_argument("--config", type=Path)
    trk.add_argument("--out", type=Path, required=True, help="trajectory file to write")

    swp = sub.add_parser("sweep", help="run the full method x integration grid")
    swp.add_argument("--config", type=Path)
    swp.add_argument("--out", type=Path, help="output directory")
    swp.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
    swp.add_argument("--workers", type=int, help="parallel seed workers")

    plo = sub.add_parser("plotdata", help="boxplot-ready records from a results file")
    plo.add_argument("--results", type=Path, required=True)
    plo.add_argument("--out", type=Path, required=True)

    return parser


def _load(args) -> RunConfig:
    return load_config(args.config) if getattr(args, "config", None) else default_config()


def _n_scans(cfg: RunConfig) -> int:
    return int(math.floor(cfg.sim_duration() * cfg.sensor.base_rate + 1e-9))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = cfg.trajectory()
    n = _n_scans(cfg)
    scans = simulate_scans(cfg.sensor, cfg.target, traj, n, seed, cfg.clutter_rate)
    gt_t, gt_xyz = gen_ground_truth(traj, cfg.sensor.base_rate, duration=n / cfg.sensor.base_rate)
    tio.write_scans(out / f"scans_seed{seed}.csv", scans)
    tio.write_ground_truth(out / "ground_truth.csv", gt_t, gt_xyz)
    print(f"wrote {n} scans ({sum(s.n_points for s in scans)} points) to {out}")
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _load(args)
    scans = tio.read_scans(args.scans, cfg.sensor.base_rate)
    gt_t, gt_xyz = tio.read_ground_truth(args.gt)
    frames = list(frame_stream(scans, args.integration))
    if not frames:
        tio.write_trajectory(args.out, track([], np.zeros(3), cfg.tracker(args.method)))
        print("no complete frames; wrote empty trajectory")
        return EXIT_OK
    if len(gt_t) == 0:
        raise FileFormatError(args.gt, 1, "ground truth is empty")
    x0 = gt_xyz[int(np.argmin(np.abs(gt_t - frames[0].t_start)))]
    result = track(frames, x0, cfg.tracker(args.method))
    tio.write_trajectory(args.out, result)
    lost = "" if result.lost_frame is None else f" (lost at frame {result.lost_frame})"
    print(f"tracked {len(result.states)}/{len(frames)} frames{lost} -> {args.out}")
    return EXIT_OK


def _grid(cfg: RunConfig):
    """(method, integration) runs: kf/ekf per count, cv once at the finest count."""
    runs = []
    for method in cfg.methods:
        if method == "cv":
            runs.append((method, min(cfg.integration_counts)))
        else:
            runs.extend((method, count) for count in cfg.integration_counts)
    return runs


def _run_seed(cfg: RunConfig, seed: int, out_dir: str) -> list[ResultRow]:
    """All grid runs for one seed; writes trajectory files, returns rows."""
    out = Path(out_dir)
    traj = cfg.trajectory()
    n = _n_scans(cfg)
    scans = simulate_scans(cfg.sensor, cfg.target, traj, n, seed, cfg.clutter_rate)
    gt_t, gt_xyz = gen_ground_truth(traj, cfg.sensor.base_rate, duration=n / cfg.sensor.base_rate)
    x0 = gt_xyz[0]

    rows = []
    for method, count in _grid(cfg):
        frames = list(frame_stream(scans, count))
        result = track(frames, x0, cfg.tracker(method))
        tio.write_trajectory(out / f"trajectory_{method}_I{count}_seed{seed}.csv", result)
        est_t, est_xyz = result.estimates()
        frames_lost = len(frames) - len(est_t)
        status = "ok" if result.lost_frame is None else "lost"
        tol = (
            cfg.association_tol
            if cfg.association_tol is not None
            else count / (2.0 * cfg.sensor.base_rate)
        )
        try:
            report = evaluate_ape(est_t, est_xyz, gt_t, gt_xyz, tol)
            stats = (
                report.median,
                report.q1,
                report.q3,
                report.whisker_lo,
                report.whisker_hi,
                report.mean,
                report.rmse,
            )
            n_pairs = report.n
        except EmptyOverlapError as exc:
            stats = (math.nan,) * 7
            n_pairs = 0
            status = f"failed:{type(exc).__name__}"
        rows.append(
            ResultRow(
                method=method,
                integration=count,
                seed=str(seed),
                n=n_pairs,
                ape_median=stats[0],
                q1=stats[1],
                q3=stats[2],
                whisker_lo=stats[3],
                whisker_hi=stats[4],
                mean=stats[5],
                rmse=stats[6],
                frames_lost=frames_lost,
                status=status,
            )
        )
    return rows


def _aggregate(rows: list[ResultRow]) -> ResultRow:
    """Across-seed row: component-wise medians, pooled counts."""
    valid = [r for r in rows if not r.status.startswith("failed")]
    med = lambda field: (
        statistics.median(getattr(r, field) for r in valid) if valid else math.nan
    )
    if all(r.status == "ok" for r in rows):
        status = "ok"
    elif any(r.status.startswith("failed") for r in rows):
        status = "failed"
    else:
        status = "lost"
    return ResultRow(
        method=rows[0].method,
        integration=rows[0].integration,
        seed="agg",
        n=sum(r.n for r in rows),
        ape_median=med("ape_median"),
        q1=med("q1"),
        q3=med("q3"),
        whisker_lo=med("whisker_lo"),
        whisker_hi=med("whisker_hi"),
        mean=med("mean"),
        rmse=med("rmse"),
        frames_lost=sum(r.frames_lost for r in rows),
        status=status,
    )


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seeds=(args.seed,))
    if args.workers is not None:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    if not cfg.methods:
        raise UsageError("no methods configured")
    if not cfg.seeds:
        raise UsageError("no seeds configured")
    if not cfg.integration_counts:
        raise UsageError("no integration counts configured")
    unknown = [m for m in cfg.methods if m not in ("kf", "ekf", "cv")]
    if unknown:
        raise UsageError(f"unknown methods: {', '.join(unknown)}")

    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    traj = cfg.trajectory()
    n = _n_scans(cfg)
    gt_t, gt_xyz = gen_ground_truth(traj, cfg.sensor.base_rate, duration=n / cfg.sensor.base_rate)
    tio.write_ground_truth(out / "ground_truth.csv", gt_t, gt_xyz)

    per_seed: dict[int, list[ResultRow]] = {}
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {
                seed: pool.submit(_run_seed, cfg, seed, str(out)) for seed in cfg.seeds
            }
            per_seed = {seed: fut.result() for seed, fut in futures.items()}
    else:
        for seed in cfg.seeds:
            per_seed[seed] = _run_seed(cfg, seed, str(out))
            print(f"seed {seed}: {len(per_seed[seed])} runs done", file=sys.stderr)

    rows = [row for seed in cfg.seeds for row in per_seed[seed]]
    by_run: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        by_run.setdefault((row.method, row.integration), []).append(row)
    rows.extend(_aggregate(group) for group in by_run.values())
    rows.sort(key=ResultRow.sort_key)

    results_path = out / "results.csv"
    tio.write_results(results_path, rows)
    print(f"wrote {len(rows)} rows to {results_path}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    rows = tio.read_results(args.results)
    agg = [r for r in rows if r.seed == "agg"]
    tio.write_plotdata(args.out, agg if agg else rows)
    print(f"wrote {len(agg if agg else rows)} records to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "track": cmd_track,
    "sweep": cmd_sweep,
    "plotdata": cmd_plotdata,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, ConfigError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report, don't traceback, at the CLI edge
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
