"""Run the three-mode batch and print success, completion time and energy.

    python3 scripts/run_montecarlo.py --runs 200 --horizon 20 --seed 0 --out runs/mc

Equivalent to ``cogctl montecarlo`` with the horizon override; also reports
the bootstrap ordering checks.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from cogctl.mission import COLLISION_RULES, FAILURE_DISTANCES, MissionConfig
from cogctl.montecarlo import BatchConfig, bootstrap_order_violations, compare, run_batch
from cogctl.mpc import MpcConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--horizon", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--collision", choices=COLLISION_RULES, default="inside")
    ap.add_argument("--failure-distance", choices=FAILURE_DISTANCES, default="center")
    ap.add_argument("--out")
    args = ap.parse_args()

    base = replace(MissionConfig(), mpc=MpcConfig(horizon=args.horizon), collision=args.collision,
                   failure_distance=args.failure_distance)
    cfg = BatchConfig(runs=args.runs, base=base, seed=args.seed, workers=args.workers)
    s = run_batch(cfg, lambda d, n: print(f"\r{d}/{n}", end="", flush=True))
    print()
    text = s.to_text() + compare(s, "s2")
    vt = bootstrap_order_violations(s.per_mission, "completion_time", ("s2", "cognitive", "s1"))
    ve = bootstrap_order_violations(s.per_mission, "energy", ("s2", "s1"))
    text += f"bootstrap violations: completion {vt:.3f}, energy {ve:.3f}\n"
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.txt").write_text(text)
        (out / "missions.csv").write_text(s.missions_csv())


if __name__ == "__main__":
    main()
