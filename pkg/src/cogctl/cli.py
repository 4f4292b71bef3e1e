"""Command line front end.

    cogctl simulate   --config F --seed N --out DIR [--mode cognitive|s1|s2]
    cogctl montecarlo --config F --runs N --seed N --out DIR [--workers K]
    cogctl replay     --log F [--resimulate]
    cogctl plot       --log F --out DIR

Exit codes: 0 ok, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import config as config_mod
from . import logs
from .mission import MODES, run
from .montecarlo import compare, run_batch

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _load(path):
    return config_mod.load(path) if path else config_mod.parse_config("")


def _write(path: Path, text: str):
    logs._write(path, text)


def cmd_simulate(args) -> int:
    doc = _load(args.config)
    rec = run(doc.mission, args.seed, args.mode)
    out = Path(args.out)
    cfg_dict = config_mod.to_dict(doc)
    logs.emit_mission_log(rec, out / "mission.jsonl", cfg_dict)
    logs.emit_plot_data(rec, out / "plot.csv")
    logs.emit_svg(rec, out / "trajectory.svg", doc.mission)
    print(f"outcome={rec.outcome} completion_time={rec.completion_time} "
          f"energy={rec.energy!r} switches={rec.switches}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    doc = _load(args.config)
    batch = doc.batch
    changes = {}
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.modes:
        changes["modes"] = tuple(args.modes)
    try:
        batch = replace(batch, **changes)
    except ValueError as e:
        raise config_mod.ConfigError(str(e)) from None

    def progress(done, total):
        if args.verbose:
            print(f"\r{done}/{total}", end="", file=sys.stderr, flush=True)

    summary = run_batch(batch, progress)
    if args.verbose:
        print(file=sys.stderr)
    out = Path(args.out)
    _write(out / "summary.csv", summary.to_csv())
    _write(out / "summary.txt", summary.to_text())
    _write(out / "missions.csv", summary.missions_csv())
    text = summary.to_text()
    if len(summary.modes) >= 2:
        report = compare(summary)
        _write(out / "compare.txt", report)
        text += report
    print(text, end="")
    return EXIT_OK


def cmd_replay(args) -> int:
    rec, cfg_dict = logs.read_mission_log(args.log)
    mission = config_mod.mission_from_dict(cfg_dict)
    ok, bad = logs.replay_matches(rec, mission.agent)
    if not ok:
        print(f"replay mismatch at tick {bad}")
        return EXIT_RUNTIME
    print(f"replay ok: {len(rec.steps)} ticks reproduce the logged states")
    if args.resimulate:
        again = run(mission, rec.seed, rec.mode)
        a = logs.mission_lines(again, cfg_dict)
        with open(args.log, encoding="utf-8") as fh:
            b = [line.rstrip("\n") for line in fh if line.strip()]
        if a != b:
            print("resimulation differs from the log")
            return EXIT_RUNTIME
        print("resimulation is byte-identical")
    return EXIT_OK


def cmd_plot(args) -> int:
    rec, cfg_dict = logs.read_mission_log(args.log)
    mission = config_mod.mission_from_dict(cfg_dict)
    out = Path(args.out)
    logs.emit_plot_data(rec, out / "plot.csv")
    logs.emit_svg(rec, out / "trajectory.svg", mission)
    print(f"wrote {out / 'plot.csv'} and {out / 'trajectory.svg'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cogctl", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one mission")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=MODES, default="cognitive")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("montecarlo", help="run a batch of randomized missions")
    m.add_argument("--config")
    m.add_argument("--runs", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--out", required=True)
    m.add_argument("--workers", type=int)
    m.add_argument("--modes", nargs="+", choices=MODES)
    m.add_argument("--verbose", action="store_true")
    m.set_defaults(func=cmd_montecarlo)

    r = sub.add_parser("replay", help="check a mission log against the dynamics")
    r.add_argument("--log", required=True)
    r.add_argument("--resimulate", action="store_true")
    r.set_defaults(func=cmd_replay)

    pl = sub.add_parser("plot", help="plot data from a mission log")
    pl.add_argument("--log", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except config_mod.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - surface every runtime failure as exit 3
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
