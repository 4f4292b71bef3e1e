"""Mission logs (JSON lines), plot tables (CSV) and a static SVG trajectory."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import agent as agent_mod
from .agent import AgentParams, AgentState
from .mission import MissionConfig, MissionRecord

PLOT_COLUMNS = ("t", "xi1", "xi2", "xi3", "attention", "psi1", "psi2", "system", "x", "y")


class LogError(RuntimeError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def mission_lines(record: MissionRecord, config: dict) -> list:
    head = {"type": "header", "seed": record.seed, "mode": record.mode, "start": record.start,
            "goal": record.goal, "config": config}
    lines = [_dumps(head)]
    for s in record.steps:
        lines.append(_dumps({"type": "tick", **s}))
    lines.append(_dumps({"type": "summary", "outcome": record.outcome,
                         "completion_time": record.completion_time, "energy": record.energy,
                         "switches": record.switches}))
    return lines


def _write(path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise LogError(f"cannot write {path}: {e.strerror}") from None


def emit_mission_log(record: MissionRecord, path, config: dict | None = None):
    _write(path, "\n".join(mission_lines(record, config or {})) + "\n")


def read_mission_log(path) -> tuple:
    """(record, config dict) from a JSON-lines mission log."""
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    except OSError as e:
        raise LogError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise LogError(f"{path}: malformed line {e.lineno}: {e.msg}") from None
    if not rows or rows[0].get("type") != "header" or rows[-1].get("type") != "summary":
        raise LogError(f"{path}: missing header or summary line")
    head, tail = rows[0], rows[-1]
    steps = []
    for r in rows[1:-1]:
        r = dict(r)
        r.pop("type")
        steps.append(r)
    rec = MissionRecord(
        seed=head["seed"], mode=head["mode"], steps=steps, outcome=tail["outcome"],
        completion_time=tail["completion_time"], energy=tail["energy"],
        switches=tail["switches"], start=head["start"], goal=head["goal"],
    )
    return rec, head.get("config", {})


def replay_states(record: MissionRecord, params: AgentParams) -> list:
    """Re-apply the logged controls from the logged start."""
    x = AgentState.at_rest(record.start)
    out = []
    for s in record.steps:
        u = np.asarray(s["control"], dtype=float)
        x = agent_mod.step(x, u, params)
        out.append(x)
    return out


def replay_matches(record: MissionRecord, params: AgentParams) -> tuple:
    """(ok, first mismatching tick or None): exact replay of positions and velocities."""
    for s, x in zip(record.steps, replay_states(record, params)):
        if x.position.tolist() != s["position"] or x.velocity.tolist() != s["velocity"]:
            return False, s["t"]
    return True, None


def plot_rows(record: MissionRecord) -> list:
    rows = []
    for s in record.steps:
        rows.append([s["t"], *s["xi"], s["attention"] + 1, *s["psi"], s["system"],
                     s["position"][0], s["position"][1]])
    return rows


def plot_csv(record: MissionRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    for r in plot_rows(record):
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def emit_plot_data(record: MissionRecord, path):
    _write(path, plot_csv(record))


def trajectory_svg(record: MissionRecord, arena=((0.0, 0.0), (1000.0, 1000.0)), size=600) -> str:
    """Top view: arena, goal, final footprints, path coloured by active system."""
    (x0, y0), (x1, y1) = arena
    sx = size / (x1 - x0)
    sy = size / (y1 - y0)

    def P(p):
        return f"{(p[0] - x0) * sx:.2f}", f"{size - (p[1] - y0) * sy:.2f}"

    def rect(center, dims, style):
        x, y = P((center[0] - dims[0] / 2, center[1] + dims[1] / 2))
        return (f'<rect x="{x}" y="{y}" width="{dims[0] * sx:.2f}" height="{dims[1] * sy:.2f}" '
                f'{style}/>')

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect x="0" y="0" width="{size}" height="{size}" fill="white" stroke="black"/>']
    if record.goal:
        out.append(rect(record.goal["center"], record.goal["size"],
                        'fill="#9c9" fill-opacity="0.5" stroke="green"'))
    if record.steps:
        for f in record.steps[-1]["fronts"]:
            out.append(rect(f["center"], f["dims"], 'fill="#f96" fill-opacity="0.4" stroke="red"'))
    colors = {1: "#d62728", 2: "#1f77b4"}
    prev = record.start
    for s in record.steps:
        (ax, ay), (bx, by) = P(prev), P(s["position"])
        out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="{colors.get(s["system"], "black")}" stroke-width="2"/>')
        prev = s["position"]
    if record.start:
        sx0, sy0 = P(record.start)
        out.append(f'<circle cx="{sx0}" cy="{sy0}" r="4" fill="black"/>')
    out.append(f'<text x="8" y="18" font-size="12">seed {record.seed} mode {record.mode} '
               f'outcome {record.outcome}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(record: MissionRecord, path, cfg: MissionConfig | None = None):
    arena = ((0.0, 0.0), (1000.0, 1000.0))
    if cfg is not None:
        arena = (tuple(cfg.hazard.arena_lo[:2]), tuple(cfg.hazard.arena_hi[:2]))
    _write(path, trajectory_svg(record, arena))
