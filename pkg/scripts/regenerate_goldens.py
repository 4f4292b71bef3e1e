"""Rewrite the golden files under tests/golden.

    python3 scripts/regenerate_goldens.py

Only run this after an intentional change to the random streams, the
hazard process or a planner; commit the diff together with the change.
"""

import json
from pathlib import Path

from cogctl import config, hazard, logs
from cogctl.mission import run
from cogctl.rng import stream

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

HAZARD_SEED = 2024
MISSION_SEED = 11
# short mission with live fronts from the first tick
MISSION_CONFIG = {
    "mpc": {"horizon": 5},
    "mission": {"max_steps": 12, "warmup_propagations": 6},
    "hazard": {"p_birth": 0.3},
}


def hazard_counts(seed, steps=80):
    g = stream(seed, "hazard")
    p = hazard.HazardParams()
    fronts, out = [], []
    for t in range(1, steps + 1):
        fronts = [f for f in hazard.advance_field(fronts, t, p, g) if f.alive]
        out.append(len(fronts))
    return out


def golden_mission():
    doc = config.parse_config(json.dumps(MISSION_CONFIG))
    rec = run(doc.mission, MISSION_SEED, "cognitive")
    return rec, config.to_dict(doc)


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    nt = {"seed": HAZARD_SEED, "n_t": hazard_counts(HAZARD_SEED)}
    (GOLDEN / "hazard_nt.json").write_text(json.dumps(nt) + "\n")
    rec, cfg = golden_mission()
    logs.emit_mission_log(rec, GOLDEN / "mission.jsonl", cfg)
    logs.emit_plot_data(rec, GOLDEN / "plot.csv")
    print(f"wrote goldens to {GOLDEN} (mission outcome {rec.outcome}, {len(rec.steps)} ticks)")


if __name__ == "__main__":
    main()
