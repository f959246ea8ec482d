"""Command line front end: list, validate, and run scenarios."""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .batch import SUMMARY_HEADER, run_batch, summary_row
from .config import ConfigError, bundled_names, resolve_scenario, serialize
from .report import emit_plot_data, render_figures
from .sim import RunMetrics


def _describe(m: RunMetrics) -> str:
    bits = [f"{m.scenario} seed {m.seed}"]
    if m.collision_speed is not None:
        bits.append(f"impact {m.collision_speed:.2f} m/s")
    if m.intensity is not None:
        bits.append(f"intensity {m.intensity:.3f} at {m.direction:+.2f} rad")
    if m.detection_latency is not None:
        bits.append(f"latency {1e3 * m.detection_latency:.0f} ms")
    if m.settling_time is not None:
        bits.append(f"settled {m.settling_time:.2f} s after detection")
    bits.append("success" if m.success else f"no-success ({m.terminal})")
    return ", ".join(bits)


def _cmd_list(_args) -> int:
    for name in bundled_names():
        print(name)
    return 0


def _cmd_validate(args) -> int:
    cfg = resolve_scenario(args.scenario)
    print(f"{cfg.name}: ok (mode {cfg.mode}, duration {cfg.duration:g} s, "
          f"{len(cfg.obstacles)} obstacle(s), {len(cfg.impulses)} impulse(s))")
    if args.dump:
        print(serialize(cfg), end="")
    return 0


def _cmd_run(args) -> int:
    if args.plot and args.out is None:
        print("--plot requires --out", file=sys.stderr)
        return 2
    if args.reps < 1:
        print("--reps must be >= 1", file=sys.stderr)
        return 2
    cfg = resolve_scenario(args.scenario)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report, logs = run_batch(cfg, args.reps, keep_logs=args.out is not None)

    for m in report.runs:
        print(_describe(m))
    if args.reps > 1:
        print(f"{report.success_count}/{args.reps} repetitions succeeded")

    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        summary = os.path.join(args.out, f"{cfg.name}_summary.csv")
        report.to_csv(summary)
        written = [summary]
        for log in logs:
            path = os.path.join(args.out, f"{log.scenario}_s{log.seed}.csv")
            log.to_csv(path)
            written.append(path)
            written.extend(emit_plot_data(log, args.out))
            if args.plot:
                written.extend(render_figures(log, args.out))
        for path in written:
            print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resquad",
        description="Collision-resilient quadrotor simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="list bundled scenarios")
    p_list.set_defaults(func=_cmd_list)

    p_val = sub.add_parser("validate", help="parse and check a scenario")
    p_val.add_argument("scenario", help="bundled name or config path")
    p_val.add_argument("--dump", action="store_true",
                       help="print the normalized config")
    p_val.set_defaults(func=_cmd_validate)

    p_run = sub.add_parser("run", help="simulate a scenario")
    p_run.add_argument("scenario", help="bundled name or config path")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--reps", type=int, default=1,
                       help="jittered repetitions (default 1)")
    p_run.add_argument("--out", default=None,
                       help="directory for logs, plot data, and summary")
    p_run.add_argument("--plot", action="store_true",
                       help="render PNG figures into --out")
    p_run.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
