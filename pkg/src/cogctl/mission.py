"""Closed-loop mission: supervisor, planners, latency-driven hazard evolution."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import agent as agent_mod
from . import attention as att
from . import fast_planner as fp
from . import hazard as hz
from . import mpc
from .agent import AgentParams, AgentState
from .geometry import Cuboid
from .miqp import Budget, branch_and_bound
from .rng import stream

MODES = ("cognitive", "s1", "s2")
_MODE_ALIASES = {"s1_only": "s1", "s2_only": "s2", "cc": "cognitive"}
OUTCOMES = ("success", "failure_trapped", "timeout")
FAILURE_DISTANCES = ("center", "footprint")
COLLISION_RULES = ("inside", "entry", "off")

# attended attribute index -> objective weights; index 0 keeps the previous
_KAPPA_BY_ATTENTION = {1: mpc.MISSION_TIME_WEIGHTS, 2: mpc.ENERGY_WEIGHTS}


def normalize_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class MissionConfig:
    agent: AgentParams = field(default_factory=AgentParams)
    hazard: hz.HazardParams = field(default_factory=hz.HazardParams)
    rrt: fp.RrtConfig = field(default_factory=fp.RrtConfig)
    lqr: fp.LqrConfig = field(default_factory=fp.LqrConfig)
    mpc: mpc.MpcConfig = field(default_factory=mpc.MpcConfig)
    weights: att.AttentionWeights = field(default_factory=att.AttentionWeights)
    q_matrix: tuple = att.DEFAULT_PERFORMANCE
    h_matrix: tuple = ((0.5, 0.0), (0.0, 0.5))
    goal_center: tuple = (900.0, 900.0)
    goal_size: tuple = (100.0, 100.0)
    start: tuple = (50.0, 50.0)
    max_steps: int = 400
    d_safe: float = 20.0
    t_fire: float = 0.5
    response_time_mode: str = "synthetic"
    synthetic_times: tuple = (0.155, 5.0)
    replan_interval: int = 1
    failure_distance: str = "center"
    # "inside": any end-of-step position in a live footprint fails the mission;
    # "entry": only moves from outside into a footprint do; "off": never
    collision: str = "inside"
    node_limit: int = 400
    warm_start: bool = True
    warmup_propagations: int = 0

    def __post_init__(self):
        if not self.d_safe > 0:
            raise ValueError("d_safe must be > 0")
        if not self.t_fire > 0:
            raise ValueError("t_fire must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.replan_interval < 1:
            raise ValueError("replan_interval must be >= 1")
        if self.response_time_mode not in ("synthetic", "measured"):
            raise ValueError("response_time_mode must be 'synthetic' or 'measured'")
        if len(self.synthetic_times) != 2 or any(not s >= 0 for s in self.synthetic_times):
            raise ValueError("synthetic_times must be two non-negative seconds values")
        if self.failure_distance not in FAILURE_DISTANCES:
            raise ValueError(f"failure_distance must be one of {FAILURE_DISTANCES}")
        if self.collision not in COLLISION_RULES:
            raise ValueError(f"collision must be one of {COLLISION_RULES}")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")
        if self.warmup_propagations < 0:
            raise ValueError("warmup_propagations must be >= 0")
        q = np.asarray(self.q_matrix, dtype=float)
        if q.shape != (2, 3) or np.any(q < 0) or np.any(q > 1):
            raise ValueError("q_matrix must be 2x3 with entries in [0, 1]")
        if np.asarray(self.h_matrix, dtype=float).shape != (2, 2):
            raise ValueError("h_matrix must be 2x2")
        d = self.agent.dim
        for name in ("goal_center", "goal_size", "start"):
            if len(getattr(self, name)) != d:
                raise ValueError(f"{name} must have {d} components")
        if self.hazard.dim != d:
            raise ValueError("hazard arena dimension differs from the agent dimension")

    @property
    def goal(self) -> Cuboid:
        return Cuboid.from_center(self.goal_center, self.goal_size)

    @property
    def start_state(self) -> AgentState:
        return AgentState.at_rest(self.start)


def propagations_for(response_time: float, t_fire: float) -> int:
    """Hazard updates while the agent waits ``response_time`` for a plan."""
    # guard against float residue such as 5.0 / 0.5 = 10.000000000000002
    return int(math.ceil(response_time / t_fire - 1e-9))


@dataclass
class World:
    t: int
    state: AgentState
    fronts: list
    next_id: int
    clock: int
    window_start: int
    decision: att.DecisionState
    u_prev: np.ndarray
    kappa: tuple
    pattern: dict = field(default_factory=dict)
    plan: list = field(default_factory=list)
    plan_t: int = -1
    outcome: Optional[str] = None


@dataclass
class MissionRecord:
    seed: int
    mode: str
    steps: list
    outcome: str
    completion_time: int
    energy: float
    switches: int
    start: list = field(default_factory=list)
    goal: dict = field(default_factory=dict)


@dataclass
class _Streams:
    hazard: np.random.Generator
    planner: np.random.Generator
    attention: np.random.Generator


def _streams(seed: int) -> _Streams:
    return _Streams(stream(seed, "hazard"), stream(seed, "planner"), stream(seed, "attention"))


def initial_world(cfg: MissionConfig, rng: _Streams) -> World:
    fronts, nid, clock = [], 0, 0
    for _ in range(cfg.warmup_propagations):
        clock += 1
        fronts = hz.advance_field(fronts, clock, cfg.hazard, rng.hazard, nid)
        nid = 1 + max((f.id for f in fronts), default=-1)
    return World(
        t=0,
        state=cfg.start_state,
        fronts=[f for f in fronts if f.alive],
        next_id=nid,
        clock=clock,
        window_start=clock,
        decision=att.DecisionState(),
        u_prev=np.zeros(cfg.agent.dim),
        kappa=(cfg.mpc.kappa_goal, cfg.mpc.kappa_smooth),
    )


def _avoid_set(world: World, cfg: MissionConfig):
    """Compressed footprint histories, minus those holding the agent."""
    live = [f for f in world.fronts if f.alive]
    cubs, keys = [], []
    for f in live:
        per = hz.occupied_history([f], world.clock, cfg.hazard.history, cfg.hazard.history_k)
        for j, c in enumerate(per):
            if not c.contains(world.state.position):
                cubs.append(c)
                keys.append((f.id, j) if len(per) > 1 else f.id)
    return cubs, keys


def _plan_fast(world, cfg, rng, avoid):
    arena = cfg.hazard.arena
    try:
        path = fp.rrt_plan(world.state.position, cfg.goal, avoid, cfg.rrt, rng.planner, arena)
    except fp.InfeasibleStartError:
        return None, {}
    info = {"reached_goal": path.reached_goal, "waypoints": len(path.waypoints)}
    if len(path.waypoints) < 2 and not path.reached_goal:
        return None, info
    _, controls = fp.track(path, world.state, cfg.agent, cfg.lqr)
    return [np.asarray(u) for u in controls], info


def _plan_deliberative(world, cfg, avoid, keys):
    mcfg = replace(
        cfg.mpc, kappa_goal=world.kappa[0], kappa_smooth=world.kappa[1],
        goal_centroid=tuple(cfg.goal.center),
    )
    inst = mpc.build_miqp(world.state, avoid, mcfg, cfg.agent, world.u_prev, cfg.hazard.arena, keys)
    warm = mpc.shift_pattern(world.pattern, mcfg.horizon) if cfg.warm_start else None
    res = branch_and_bound(inst, Budget(node_limit=cfg.node_limit), warm_start=warm)
    info = {"status": res.status, "nodes": res.nodes_explored}
    if res.incumbent is None:
        return None, info, {}
    _, controls = mpc.decode(inst, res.incumbent)
    return controls, info, mpc.face_pattern(inst, res.incumbent)


def _front_distance(p, fronts, mode: str) -> float:
    best = math.inf
    for f in fronts:
        if not f.alive:
            continue
        if mode == "center":
            d = float(np.linalg.norm(p - f.center))
        else:
            d = f.footprint().distance(p)
        best = min(best, d)
    return best


def _inside_any(p, fronts) -> bool:
    return any(f.alive and f.footprint().contains(p) for f in fronts)


def tick(world: World, cfg: MissionConfig, rng: _Streams, mode: str = "cognitive") -> dict:
    """Advance ``world`` by one supervisory step in place and return its telemetry."""
    if world.outcome is not None:
        raise RuntimeError("mission already terminated")
    mode = normalize_mode(mode)
    p = world.state.position
    d_t = hz.distance_to_newest(p, world.fronts, world.clock, since=world.window_start)
    a_state = att.attend(world.t, d_t, cfg.weights, rng.attention)
    decision = att.decide(world.decision, a_state, cfg.q_matrix, cfg.h_matrix)
    if mode == "s1":
        decision = att.DecisionState(decision.psi, att.SYSTEM_FAST)
    elif mode == "s2":
        decision = att.DecisionState(decision.psi, att.SYSTEM_DELIBERATIVE)
    switched = decision.active != world.decision.active
    world.decision = decision
    if a_state.index in _KAPPA_BY_ATTENTION:
        world.kappa = _KAPPA_BY_ATTENTION[a_state.index]

    born_recently = any(world.window_start <= f.born_at <= world.clock
                        for f in world.fronts if f.alive and f.born_at > 0)
    due = (
        not world.plan
        or world.t - world.plan_t >= cfg.replan_interval
        or switched
        or born_recently
    )
    active = decision.active
    t_s = 0.0
    used = None
    info: dict = {}
    if due:
        avoid, keys = _avoid_set(world, cfg)
        order = (active, 3 - active)
        plan = None
        for system in order:
            t0 = time.perf_counter()
            if system == att.SYSTEM_FAST:
                plan, info = _plan_fast(world, cfg, rng, avoid)
                pattern = None
            else:
                plan, info, pattern = _plan_deliberative(world, cfg, avoid, keys)
            elapsed = time.perf_counter() - t0
            t_s += elapsed if cfg.response_time_mode == "measured" else cfg.synthetic_times[system - 1]
            if plan:
                used = system
                if pattern is not None:
                    world.pattern = pattern
                break
        world.plan = list(plan) if plan else []
        world.plan_t = world.t
    n_prop = max(1, propagations_for(t_s, cfg.t_fire)) if due else 1

    window_start = world.clock + 1
    for _ in range(n_prop):
        world.clock += 1
        world.fronts = hz.advance_field(world.fronts, world.clock, cfg.hazard, rng.hazard, world.next_id)
        world.fronts = [f for f in world.fronts if f.alive]
        world.next_id = 1 + max([f.id for f in world.fronts] + [world.next_id - 1])
        if _front_distance(p, world.fronts, cfg.failure_distance) < cfg.d_safe:
            world.outcome = "failure_trapped"
            break
    world.window_start = window_start

    u = np.zeros(cfg.agent.dim)
    if world.outcome is None:
        if world.plan:
            u = agent_mod.clamp(world.plan.pop(0), world.state, cfg.agent)
        was_inside = _inside_any(p, world.fronts)
        world.state = agent_mod.step(world.state, u, cfg.agent)
        now_inside = _inside_any(world.state.position, world.fronts)
        if (cfg.collision == "inside" and now_inside) or (
            cfg.collision == "entry" and now_inside and not was_inside
        ):
            world.outcome = "failure_trapped"
        elif cfg.goal.contains(world.state.position):
            world.outcome = "success"
    rec = {
        "t": world.t,
        "system": int(active),
        "planner": used,
        "replanned": bool(due),
        "plan_id": world.plan_t,
        "d_t": None if math.isinf(d_t) else d_t,
        "xi": a_state.xi.tolist(),
        "probs": a_state.probs.tolist(),
        "attention": a_state.index,
        "psi": decision.psi.tolist(),
        "kappa": list(world.kappa),
        "t_s": t_s,
        "propagations": n_prop,
        "position": world.state.position.tolist(),
        "velocity": world.state.velocity.tolist(),
        "control": u.tolist(),
        "fronts": [f.to_dict() for f in world.fronts],
        "info": info,
        "outcome": world.outcome,
    }
    world.u_prev = u
    world.t += 1
    if world.outcome is None and world.t >= cfg.max_steps:
        world.outcome = "timeout"
        rec["outcome"] = "timeout"
    return rec


def run(cfg: MissionConfig, seed: int, mode: str = "cognitive") -> MissionRecord:
    """Simulate one mission; deterministic in ``(cfg, seed, mode)`` for synthetic timing."""
    mode = normalize_mode(mode)
    rng = _streams(seed)
    world = initial_world(cfg, rng)
    steps = []
    if cfg.goal.contains(world.state.position):
        world.outcome = "success"
    while world.outcome is None:
        steps.append(tick(world, cfg, rng, mode))
    rec = MissionRecord(
        seed=seed,
        mode=mode,
        steps=steps,
        outcome=world.outcome,
        completion_time=len(steps),
        energy=0.0,
        switches=0,
        start=list(cfg.start),
        goal={"center": list(cfg.goal_center), "size": list(cfg.goal_size)},
    )
    m = metrics(rec)
    rec.energy, rec.switches = m["energy"], m["switches"]
    return rec


def energy(controls) -> float:
    us = [np.asarray(u, dtype=float) for u in controls]
    return float(sum(np.sum((b - a) ** 2) for a, b in zip(us[:-1], us[1:])))


def switches(systems) -> int:
    return int(sum(1 for a, b in zip(systems[:-1], systems[1:]) if a != b))


def metrics(record: MissionRecord) -> dict:
    controls = [s["control"] for s in record.steps]
    systems = [s["system"] for s in record.steps]
    return {
        "success": record.outcome == "success",
        "completion_time": len(record.steps),
        "energy": energy(controls),
        "switches": switches(systems),
    }
