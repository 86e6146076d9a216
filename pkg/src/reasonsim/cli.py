"""Command-line entry point: ``reasonsim run`` and ``reasonsim compare``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, replace

from . import plots
from .config import ConfigError, parse_scenario
from .sim import ScenarioInfeasibleError, SimConfig, SimMode, run

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_COLLISION = 0, 2, 3, 4


@dataclass(frozen=True)
class RunArtifacts:
    log_csv: str
    trajectory_svg: str
    scores_svg: str
    speed_svg: str
    summary_txt: str
    summary: object
    log: object


def _progress(quiet: bool, label: str):
    if quiet:
        return None

    def cb(k, t):
        if k % 100 == 0:
            print(f"[{label}] t = {t:5.1f} s", file=sys.stderr)

    return cb


def write_artifacts(log, config: SimConfig, out_dir: str) -> RunArtifacts:
    os.makedirs(out_dir, exist_ok=True)
    sc = config.scenario
    paths = {name: os.path.join(out_dir, name) for name in
             ("log.csv", "trajectory.svg", "scores.svg", "speed.svg", "summary.txt")}
    log.write_csv(paths["log.csv"])
    plots.trajectory_chart(log, sc.road).save(paths["trajectory.svg"])
    plots.scores_chart(log, sc.thresholds).save(paths["scores.svg"])
    plots.speed_chart(log).save(paths["speed.svg"])
    summary = log.summary()
    with open(paths["summary.txt"], "w", encoding="utf-8") as fh:
        fh.write(summary.to_text())
    return RunArtifacts(paths["log.csv"], paths["trajectory.svg"], paths["scores.svg"],
                        paths["speed.svg"], paths["summary.txt"], summary, log)


def run_command(config_path, mode: str, out_dir: str, quiet: bool = False) -> RunArtifacts:
    config = replace(parse_scenario(config_path), mode=SimMode(mode))
    log = run(config, _progress(quiet, mode))
    return write_artifacts(log, config, out_dir)


def _fmt(v):
    return "none" if v is None else f"{v:.6g}"


def compare_command(config_path, out_dir: str, quiet: bool = False) -> dict:
    base = parse_scenario(config_path)
    arts = {}
    for mode in SimMode:
        config = replace(base, mode=mode)
        log = run(config, _progress(quiet, mode.value))
        arts[mode] = (log, config)
    # all files are written only after both runs finished
    results = {m: write_artifacts(log, cfg, os.path.join(out_dir, m.value)) for m, (log, cfg) in arts.items()}
    b = results[SimMode.BASELINE].summary
    r = results[SimMode.REPLANNER].summary
    ratio = (r.arrival_time / b.arrival_time
             if b.arrival_time and r.arrival_time is not None else None)
    fields = [
        ("arrival_time", b.arrival_time, r.arrival_time),
        ("num_replans", b.num_replans, r.num_replans),
        ("min_distance", b.min_ego_cyclist_distance, r.min_ego_cyclist_distance),
        ("min_r_policy", b.min_r_policy, r.min_r_policy),
        ("min_r_vru", b.min_r_vru, r.min_r_vru),
        ("min_r_driver", b.min_r_driver, r.min_r_driver),
        ("collision", b.collision, r.collision),
    ]
    with open(os.path.join(out_dir, "comparison.csv"), "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["metric", "baseline", "replanner"])
        for name, bv, rv in fields:
            wr.writerow([name, "none" if bv is None else repr(bv), "none" if rv is None else repr(rv)])
        wr.writerow(["arrival_ratio", "", "none" if ratio is None else repr(ratio)])
    lines = [f"{'metric':<16}{'baseline':>14}{'replanner':>14}"]
    for name, bv, rv in fields:
        fmt = (lambda v: str(v).lower()) if isinstance(bv, bool) else _fmt
        lines.append(f"{name:<16}{fmt(bv):>14}{fmt(rv):>14}")
    lines.append(f"{'arrival_ratio':<16}{'':>14}{_fmt(ratio):>14}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out_dir, "comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return {"results": results, "ratio": ratio, "text": text}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reasonsim", description="Reason-supervised overtaking simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate one mode")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=[m.value for m in SimMode], required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--quiet", action="store_true")
    p_cmp = sub.add_parser("compare", help="simulate both modes side by side")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            art = run_command(args.config, args.mode, args.out, args.quiet)
            summaries = [art.summary]
            if not args.quiet:
                print(art.summary.to_text(), end="")
        else:
            res = compare_command(args.config, args.out, args.quiet)
            summaries = [a.summary for a in res["results"].values()]
            if not args.quiet:
                print(res["text"], end="")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if any(s.collision for s in summaries):
        print("error: collision with the cyclist", file=sys.stderr)
        return EXIT_COLLISION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
