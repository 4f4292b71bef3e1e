"""Deliberative planner: rolling-horizon MPC posed as a big-M MIQP."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .agent import AgentParams, AgentState, build_matrices
from .geometry import Cuboid
from .miqp import BigMGroup, MIQPInstance, check_solution

# (kappa_goal, kappa_smooth) for the two attributes that reweight the objective
MISSION_TIME_WEIGHTS = (1.0, 0.001)
ENERGY_WEIGHTS = (0.001, 1.0)


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 80
    kappa_goal: float = MISSION_TIME_WEIGHTS[0]
    kappa_smooth: float = MISSION_TIME_WEIGHTS[1]
    big_m: float = 1e5
    strict_margin: float = 0.5
    goal_centroid: Optional[tuple] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kappa_goal < 0 or self.kappa_smooth < 0:
            raise ValueError("kappa weights must be >= 0")
        if self.kappa_goal == 0 and self.kappa_smooth == 0:
            raise ValueError("kappa weights cannot both be 0")
        if not self.big_m > 0:
            raise ValueError("big_m must be > 0")
        if not self.strict_margin > 0:
            raise ValueError("strict_margin must be > 0")


class Layout:
    """Index map: x_1..x_T, then u_1..u_T, then b_{tau,i,l}."""

    def __init__(self, horizon: int, dim: int, n_cuboids: int):
        self.T, self.dim, self.k = horizon, dim, n_cuboids
        self.nx = 2 * dim
        self.n_cont = horizon * (self.nx + dim)
        self.faces = 2 * dim
        self.n_bin = horizon * n_cuboids * self.faces

    def x(self, tau: int) -> slice:  # tau in 1..T
        s = (tau - 1) * self.nx
        return slice(s, s + self.nx)

    def p(self, tau: int) -> slice:
        s = (tau - 1) * self.nx
        return slice(s, s + self.dim)

    def u(self, tau: int) -> slice:
        s = self.T * self.nx + (tau - 1) * self.dim
        return slice(s, s + self.dim)

    def b(self, tau: int, i: int, l: int) -> int:
        return self.n_cont + ((tau - 1) * self.k + i) * self.faces + l


def build_miqp(
    state: AgentState,
    avoid: list,
    cfg: MpcConfig,
    agent: AgentParams,
    u_prev=None,
    arena: Optional[Cuboid] = None,
    keys: Optional[list] = None,
) -> MIQPInstance:
    """Assemble the horizon-T avoidance MIQP from the current state.

    ``keys`` label the cuboids (e.g. front ids) so solutions can be shifted
    across replans; groups are keyed ``(tau, key)``.
    """
    dim = agent.dim
    if cfg.goal_centroid is None:
        raise ValueError("goal_centroid must be set before building")
    goal = np.asarray(cfg.goal_centroid, dtype=float)
    x0 = state.vector()
    if not np.all(np.isfinite(x0)):
        raise ValueError("state must be finite")
    u_prev = np.zeros(dim) if u_prev is None else np.asarray(u_prev, dtype=float)
    keys = list(range(len(avoid))) if keys is None else list(keys)
    if len(keys) != len(avoid):
        raise ValueError("one key per cuboid")
    T = cfg.horizon
    L = Layout(T, dim, len(avoid))
    n = L.n_cont + L.n_bin
    Phi, Gam = build_matrices(agent)

    H = np.zeros((n, n))
    f = np.zeros(n)
    const = 0.0
    k1, k2 = cfg.kappa_goal, cfg.kappa_smooth
    for tau in range(1, T + 1):
        ps = L.p(tau)
        H[ps, ps] += 2 * k1 * np.eye(dim)
        f[ps] += -2 * k1 * goal
        const += k1 * float(goal @ goal)
        us = L.u(tau)
        H[us, us] += 2 * k2 * np.eye(dim)
        if tau == 1:
            f[us] += -2 * k2 * u_prev
            const += k2 * float(u_prev @ u_prev)
        else:
            prev = L.u(tau - 1)
            H[prev, prev] += 2 * k2 * np.eye(dim)
            H[us, prev] -= 2 * k2 * np.eye(dim)
            H[prev, us] -= 2 * k2 * np.eye(dim)

    A_eq = np.zeros((T * L.nx, n))
    b_eq = np.zeros(T * L.nx)
    for tau in range(1, T + 1):
        r = slice((tau - 1) * L.nx, tau * L.nx)
        A_eq[r, L.x(tau)] = np.eye(L.nx)
        A_eq[r, L.u(tau)] = -Gam
        if tau == 1:
            b_eq[r] = Phi @ x0
        else:
            A_eq[r, L.x(tau - 1)] = -Phi

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    if arena is not None:
        lo, hi = arena.bounds()
    else:
        lo = np.full(dim, -np.inf)
        hi = np.full(dim, np.inf)
    for tau in range(1, T + 1):
        xs = L.x(tau)
        lb[xs] = np.concatenate([lo, np.full(dim, -agent.v_max)])
        ub[xs] = np.concatenate([hi, np.full(dim, agent.v_max)])
        lb[L.u(tau)] = -agent.u_max
        ub[L.u(tau)] = agent.u_max
    lb[L.n_cont:] = 0.0
    ub[L.n_cont:] = 1.0

    rows, rhs, groups = [], [], []
    M, eps = cfg.big_m, cfg.strict_margin
    for tau in range(1, T + 1):
        ps = L.p(tau)
        for i, c in enumerate(avoid):
            bins, brows = [], []
            for l in range(L.faces):
                # alpha.p >= beta + eps - M b   <=>   -alpha.p - M b <= -beta - eps
                row = np.zeros(n)
                row[ps] = -c.normals[l]
                j = L.b(tau, i, l)
                row[j] = -M
                brows.append(len(rows))
                bins.append(j)
                rows.append(row)
                rhs.append(-c.offsets[l] - eps)
            card = np.zeros(n)
            card[bins] = 1.0
            groups.append(BigMGroup((tau, keys[i]), tuple(bins), tuple(brows), len(rows), L.faces - 1))
            rows.append(card)
            rhs.append(float(L.faces - 1))
    A_ineq = np.array(rows) if rows else np.zeros((0, n))
    b_ineq = np.array(rhs)
    inst = MIQPInstance(
        H=H, f=f, A_ineq=A_ineq, b_ineq=b_ineq, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=ub,
        n_cont=L.n_cont, n_bin=L.n_bin, groups=groups, const=const,
        meta={"layout": L, "x0": x0, "u_prev": u_prev, "agent": agent,
              "cuboids": list(avoid), "keys": keys, "margin": eps},
    )
    if avoid:
        _assert_big_m(inst)
    return inst


def _assert_big_m(inst: MIQPInstance):
    """A binary at 1 must leave its row slack anywhere in the variable box."""
    nc = inst.n_cont
    lo, hi = inst.lb[:nc], inst.ub[:nc]
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("big-M sufficiency needs a bounded arena")
    for g in inst.groups:
        total = 0.0
        for j, r in zip(g.binaries, g.rows):
            a = inst.A_ineq[r, :nc]
            worst = float(np.maximum(a * lo, a * hi).sum() - inst.b_ineq[r])
            m = -inst.A_ineq[r, j]
            if worst > m:
                raise AssertionError(f"big-M {m} below worst deficit {worst} in group {g.key}")
            total += max(worst, 0.0) / m
        if total > 1.0:
            raise AssertionError(f"big-M too small for the cardinality row of group {g.key}")


def decode(inst: MIQPInstance, z) -> tuple:
    """Trajectory and controls from a feasible assignment."""
    z = np.asarray(z, dtype=float)
    if z.shape != (inst.n,):
        raise DecodeError(f"assignment has shape {z.shape}, expected ({inst.n},)")
    bad = check_solution(inst, z)
    if bad is not None:
        raise DecodeError(f"infeasible assignment: {bad}")
    L: Layout = inst.meta["layout"]
    eps = inst.meta["margin"]
    traj, controls = [], []
    for tau in range(1, L.T + 1):
        x = z[L.x(tau)]
        traj.append(AgentState(x[: L.dim].copy(), x[L.dim:].copy()))
        controls.append(z[L.u(tau)].copy())
    for tau, s in enumerate(traj, start=1):
        for i, c in enumerate(inst.meta["cuboids"]):
            slack = c.normals @ s.position - c.offsets
            if slack.max() < eps - 1e-6:
                raise DecodeError(f"position at tau={tau} within margin of cuboid {inst.meta['keys'][i]}")
    return traj, controls


def objective_value(traj, controls, cfg: MpcConfig, u_prev=None) -> float:
    if len(traj) != len(controls):
        raise ValueError("trajectory and controls must have the same length")
    if len(traj) == 0:
        raise ValueError("empty plan")
    goal = np.asarray(cfg.goal_centroid, dtype=float)
    cost = 0.0
    for s in traj:
        p = s.position if isinstance(s, AgentState) else np.asarray(s, dtype=float)[: goal.size]
        cost += cfg.kappa_goal * float(np.sum((p - goal) ** 2))
    us = [np.asarray(u, dtype=float) for u in controls]
    if u_prev is not None:
        us = [np.asarray(u_prev, dtype=float)] + us
    for a, b in zip(us[:-1], us[1:]):
        cost += cfg.kappa_smooth * float(np.sum((b - a) ** 2))
    return cost


def face_pattern(inst: MIQPInstance, z) -> dict:
    """Enforced face per group ``(tau, key) -> l`` of a solved assignment."""
    out = {}
    for g in inst.groups:
        vals = z[list(g.binaries)]
        zeros = np.flatnonzero(vals < 0.5)
        if zeros.size:
            out[g.key] = int(zeros[0])
    return out


def shift_pattern(pattern: dict, horizon: int) -> dict:
    """Advance a face pattern by one step; the last step repeats its predecessor."""
    out = {}
    for (tau, key), face in pattern.items():
        if tau >= 2:
            out[(tau - 1, key)] = face
    for (tau, key), face in pattern.items():
        if tau == horizon:
            out[(horizon, key)] = face
    return out
