"""Batches of randomized missions across execution modes, paired by seed."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .mission import MissionConfig, metrics, normalize_mode, run
from .rng import derive_seed, stream

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Randomization:
    """Start and goal-centre boxes, as (lo, hi) corner pairs."""

    start_lo: tuple = (0.0, 0.0)
    start_hi: tuple = (200.0, 200.0)
    goal_lo: tuple = (850.0, 850.0)
    goal_hi: tuple = (950.0, 950.0)
    enabled: bool = True


@dataclass(frozen=True)
class BatchConfig:
    runs: int = 200
    base: MissionConfig = field(default_factory=MissionConfig)
    randomize: Randomization = field(default_factory=Randomization)
    modes: tuple = ("cognitive", "s1", "s2")
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.modes:
            raise ValueError("at least one mode is required")
        for m in self.modes:
            normalize_mode(m)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class ModeSummary:
    mode: str
    runs: int
    successes: int
    success_rate: float
    success_half_width: float
    mean_completion_time: float
    completion_half_width: float
    mean_energy: float
    energy_half_width: float
    outcomes: dict


@dataclass
class BatchSummary:
    modes: dict
    per_mission: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = ["mode runs success_rate +- mean_completion +- mean_energy +-"]
        for m in self.modes.values():
            lines.append(
                f"{m.mode} {m.runs} {m.success_rate:.4f} {m.success_half_width:.4f} "
                f"{m.mean_completion_time:.4f} {m.completion_half_width:.4f} "
                f"{m.mean_energy:.4f} {m.energy_half_width:.4f}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "runs", "successes", "success_rate", "success_hw",
                    "mean_completion_time", "completion_hw", "mean_energy", "energy_hw"])
        for m in self.modes.values():
            w.writerow([m.mode, m.runs, m.successes, repr(m.success_rate), repr(m.success_half_width),
                        repr(m.mean_completion_time), repr(m.completion_half_width),
                        repr(m.mean_energy), repr(m.energy_half_width)])
        return buf.getvalue()

    def missions_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "seed", "mode", "outcome", "completion_time", "energy", "switches"])
        for r in self.per_mission:
            w.writerow([r["index"], r["seed"], r["mode"], r["outcome"], r["completion_time"],
                        repr(r["energy"]), r["switches"]])
        return buf.getvalue()


def mission_seed(batch_seed: int, index: int) -> int:
    """Mission seed from (batch seed, index); identical across modes."""
    return int(derive_seed(batch_seed, "mission", index).generate_state(1, np.uint64)[0] >> np.uint64(1))


def mission_config(cfg: BatchConfig, index: int) -> MissionConfig:
    r = cfg.randomize
    if not r.enabled:
        return cfg.base
    g = stream(cfg.seed, "layout", index)
    start = g.uniform(r.start_lo, r.start_hi)
    goal = g.uniform(r.goal_lo, r.goal_hi)
    return replace(cfg.base, start=tuple(float(v) for v in start),
                   goal_center=tuple(float(v) for v in goal))


def _one(args):
    cfg, index, mode = args
    seed = mission_seed(cfg.seed, index)
    rec = run(mission_config(cfg, index), seed, mode)
    m = metrics(rec)
    return {"index": index, "seed": seed, "mode": rec.mode, "outcome": rec.outcome,
            "completion_time": m["completion_time"], "energy": m["energy"],
            "switches": m["switches"]}


def _mean_hw(x) -> tuple:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(Z95 * x.std(ddof=1) / math.sqrt(x.size))


def summarize(rows: list, modes) -> BatchSummary:
    out = {}
    for mode in modes:
        mode = normalize_mode(mode)
        # sort so the summary does not depend on completion order
        sub = sorted((r for r in rows if r["mode"] == mode), key=lambda r: r["index"])
        n = len(sub)
        ok = [r for r in sub if r["outcome"] == "success"]
        rate = len(ok) / n if n else math.nan
        hw = Z95 * math.sqrt(rate * (1 - rate) / n) if n else math.nan
        ct, ct_hw = _mean_hw([r["completion_time"] for r in ok])
        en, en_hw = _mean_hw([r["energy"] for r in ok])
        counts = {}
        for r in sub:
            counts[r["outcome"]] = counts.get(r["outcome"], 0) + 1
        out[mode] = ModeSummary(mode, n, len(ok), rate, hw, ct, ct_hw, en, en_hw,
                                dict(sorted(counts.items())))
    rows = sorted(rows, key=lambda r: (r["index"], r["mode"]))
    return BatchSummary(out, rows)


def run_batch(cfg: BatchConfig, progress=None) -> BatchSummary:
    jobs = [(cfg, i, normalize_mode(m)) for i in range(cfg.runs) for m in cfg.modes]
    rows = []
    if cfg.workers == 1:
        for j in jobs:
            rows.append(_one(j))
            if progress:
                progress(len(rows), len(jobs))
    else:
        with ProcessPoolExecutor(cfg.workers) as ex:
            for r in ex.map(_one, jobs, chunksize=1):
                rows.append(r)
                if progress:
                    progress(len(rows), len(jobs))
    return summarize(rows, cfg.modes)


def compare(summary: BatchSummary, baseline: Optional[str] = None) -> str:
    """Success, completion time and energy per mode, with deltas to a baseline."""
    if len(summary.modes) < 2:
        raise ValueError("compare needs at least two modes")
    names = list(summary.modes)
    base = summary.modes[normalize_mode(baseline) if baseline else names[0]]
    lines = []
    for title, attr in (("success rate", "success_rate"),
                        ("mean completion time (successes)", "mean_completion_time"),
                        ("mean energy (successes)", "mean_energy")):
        hw_attr = {"success_rate": "success_half_width",
                   "mean_completion_time": "completion_half_width",
                   "mean_energy": "energy_half_width"}[attr]
        lines.append(f"[{title}]")
        for name in names:
            m = summary.modes[name]
            v, hw = getattr(m, attr), getattr(m, hw_attr)
            delta = v - getattr(base, attr)
            lines.append(f"  {name:<10} {v:12.4f} +- {hw:.4f}   delta vs {base.mode}: {delta:+.4f}")
    return "\n".join(lines) + "\n"


def bootstrap_order_violations(rows: list, key: str, order: tuple, resamples: int = 1000,
                               seed: int = 0) -> float:
    """Fraction of bootstrap resamples (over mission index) breaking
    ``mean(order[0]) <= mean(order[1]) <= ...`` among successful missions."""
    by_index = {}
    for r in rows:
        by_index.setdefault(r["index"], {})[r["mode"]] = r
    idx = sorted(by_index)
    g = np.random.Generator(np.random.PCG64(derive_seed(seed, "bootstrap")))
    table = {m: np.array([by_index[i][m][key] if by_index[i][m]["outcome"] == "success" else np.nan
                          for i in idx], dtype=float) for m in order}
    bad = 0
    for _ in range(resamples):
        pick = g.integers(0, len(idx), len(idx))
        means = [np.nanmean(table[m][pick]) if np.any(~np.isnan(table[m][pick])) else np.nan
                 for m in order]
        if any(np.isnan(means)) or any(a > b for a, b in zip(means[:-1], means[1:])):
            bad += 1
    return bad / resamples
