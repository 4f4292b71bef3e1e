"""Fast heuristic planning: RRT reference path + LQR path tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import agent
from .agent import AgentParams, AgentState
from .geometry import Cuboid, points_in_any, stack


class InfeasibleStartError(ValueError):
    pass


class RiccatiError(RuntimeError):
    pass


@dataclass(frozen=True)
class RrtConfig:
    step_size: float = 15.0
    max_iterations: int = 500
    goal_bias: float = 0.05
    collision_check_resolution: float = 1.0

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 <= self.goal_bias < 1:
            raise ValueError("goal_bias must lie in [0, 1)")
        if not 0 < self.collision_check_resolution <= self.step_size:
            raise ValueError("collision_check_resolution must lie in (0, step_size]")


@dataclass(frozen=True)
class LqrConfig:
    q_weight: float | tuple = 2.0
    r_weight: float | tuple = 0.1
    riccati_tolerance: float = 1e-10
    riccati_max_iter: int = 10000
    # add the open-loop input that reproduces the reference exactly
    feedforward: bool = True

    def matrices(self, n_state: int, n_input: int) -> tuple[np.ndarray, np.ndarray]:
        Q = _as_matrix(self.q_weight, n_state)
        R = _as_matrix(self.r_weight, n_input)
        return Q, R


def _as_matrix(w, n) -> np.ndarray:
    a = np.asarray(w, dtype=float)
    if a.ndim == 0:
        return float(a) * np.eye(n)
    if a.ndim == 1:
        return np.diag(a)
    return a


@dataclass
class ReferencePath:
    waypoints: list
    reached_goal: bool
    iterations: int = 0
    tree_size: int = 1


# ---------------------------------------------------------------- RRT


def nearest_neighbour(tree, q) -> np.ndarray:
    pts = np.asarray(tree, dtype=float)
    if pts.size == 0:
        raise ValueError("nearest_neighbour on an empty tree")
    d2 = np.sum((pts - np.asarray(q, dtype=float)) ** 2, axis=1)
    return pts[int(np.argmin(d2))]


def steer(frm, toward, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("step must be > 0")
    frm = np.asarray(frm, dtype=float)
    toward = np.asarray(toward, dtype=float)
    delta = toward - frm
    dist = float(np.linalg.norm(delta))
    if dist <= step:
        return toward.copy()
    return frm + (step / dist) * delta


def _segment_samples(a, b, resolution) -> np.ndarray:
    length = float(np.linalg.norm(b - a))
    n = max(1, int(math.ceil(length / resolution)))
    s = np.linspace(0.0, 1.0, n + 1)[:, None]
    return a + s * (b - a)


def path_free(a, b, obstacles, resolution: float) -> bool:
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    if not obstacles:
        return True
    normals, offsets = obstacles if isinstance(obstacles, tuple) else stack(obstacles)
    pts = _segment_samples(np.asarray(a, dtype=float), np.asarray(b, dtype=float), resolution)
    return not bool(points_in_any(pts, normals, offsets).any())


def rrt_plan(
    start,
    goal: Cuboid,
    obstacles: list,
    cfg: RrtConfig,
    rng: np.random.Generator,
    arena: Cuboid,
) -> ReferencePath:
    """Grow a tree from ``start`` until a node lands in ``goal`` or the budget ends.

    On budget exhaustion the branch ending nearest the goal centroid is returned
    with ``reached_goal=False``.
    """
    start = np.asarray(start, dtype=float)
    packed = stack(obstacles)
    if obstacles and points_in_any(start[None], *packed)[0]:
        raise InfeasibleStartError(f"start {start.tolist()} lies inside an obstacle")
    if goal.contains(start):
        return ReferencePath([start.copy()], True, 0, 1)
    lo, hi = arena.bounds()
    goal_c = goal.center
    dim = start.size
    cap = cfg.max_iterations + 1
    nodes = np.empty((cap, dim))
    parent = np.full(cap, -1, dtype=int)
    nodes[0] = start
    count = 1
    reached = -1
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        if cfg.goal_bias > 0 and rng.random() < cfg.goal_bias:
            sample = goal_c
        else:
            sample = rng.uniform(lo, hi)
        d2 = np.sum((nodes[:count] - sample) ** 2, axis=1)
        near = int(np.argmin(d2))
        new = steer(nodes[near], sample, cfg.step_size)
        if np.array_equal(new, nodes[near]):
            continue
        if obstacles and not path_free(nodes[near], new, packed, cfg.collision_check_resolution):
            continue
        nodes[count] = new
        parent[count] = near
        count += 1
        if goal.contains(new):
            reached = count - 1
            break
    if reached >= 0:
        end = reached
    else:
        end = int(np.argmin(np.sum((nodes[:count] - goal_c) ** 2, axis=1)))
    branch = []
    k = end
    while k >= 0:
        branch.append(nodes[k].copy())
        k = parent[k]
    branch.reverse()
    return ReferencePath(branch, reached >= 0, it, count)


# ---------------------------------------------------------------- LQR


def riccati(Phi, Gamma, Q, R, tol=1e-10, max_iter=10000) -> np.ndarray:
    """Fixed point of the discrete Riccati recursion by value iteration."""
    P = Q.copy()
    for _ in range(max_iter):
        S = R + Gamma.T @ P @ Gamma
        PG = P @ Gamma
        P_next = Q + Phi.T @ (P - PG @ np.linalg.solve(S, PG.T)) @ Phi
        P_next = 0.5 * (P_next + P_next.T)
        if np.max(np.abs(P_next - P)) <= tol * max(1.0, np.max(np.abs(P_next))):
            return P_next
        P = P_next
    raise RiccatiError(f"Riccati recursion did not converge in {max_iter} iterations")


def lqr_gain(Phi, Gamma, cfg: LqrConfig) -> np.ndarray:
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    Gamma = np.asarray(Gamma, dtype=float).reshape(Phi.shape[0], -1)
    Q, R = cfg.matrices(Phi.shape[0], Gamma.shape[1])
    return _cached_gain(
        Phi.tobytes(), Gamma.tobytes(), Q.tobytes(), R.tobytes(),
        Phi.shape, Gamma.shape, cfg.riccati_tolerance, cfg.riccati_max_iter,
    ).copy()


@lru_cache(maxsize=64)
def _cached_gain(phi_b, gam_b, q_b, r_b, phi_shape, gam_shape, tol, max_iter):
    Phi = np.frombuffer(phi_b).reshape(phi_shape)
    Gamma = np.frombuffer(gam_b).reshape(gam_shape)
    n, m = gam_shape
    Q = np.frombuffer(q_b).reshape(n, n)
    R = np.frombuffer(r_b).reshape(m, m)
    P = riccati(Phi, Gamma, Q, R, tol, max_iter)
    return np.linalg.solve(R + Gamma.T @ P @ Gamma, Gamma.T @ P @ Phi)


def reference_states(path: ReferencePath, dt: float) -> np.ndarray:
    """Lift waypoints to states via forward-difference velocities (last one at rest)."""
    w = np.asarray(path.waypoints, dtype=float)
    v = np.zeros_like(w)
    if len(w) > 1:
        v[:-1] = (w[1:] - w[:-1]) / dt
    return np.hstack([w, v])


def feedforward_inputs(ref: np.ndarray, params: AgentParams) -> np.ndarray:
    """Inputs ``u_k`` with ``ref[k+1] = Phi ref[k] + Gamma u_k`` (exact for our lift)."""
    Phi, Gamma = agent.build_matrices(params)
    if len(ref) < 2:
        return np.zeros((0, params.dim))
    resid = ref[1:] - ref[:-1] @ Phi.T
    return np.linalg.lstsq(Gamma, resid.T, rcond=None)[0].T


def track(path: ReferencePath, state: AgentState, params: AgentParams, cfg: LqrConfig):
    """Follow ``path`` with clamped LQR feedback for ``len(path)`` steps.

    Control ``k`` (0-based) is ``u_ff[k] - K (x_k - ref_k)``; past the end of the
    path the last (stationary) reference is held with zero feedforward.
    """
    if not path.waypoints:
        raise ValueError("cannot track an empty path")
    Phi, Gamma = agent.build_matrices(params)
    K = lqr_gain(Phi, Gamma, cfg)
    ref = reference_states(path, params.dt)
    ff = feedforward_inputs(ref, params) if cfg.feedforward else np.zeros((0, params.dim))
    n = len(ref)
    x = state
    traj, controls = [], []
    for k in range(n):
        u = -K @ (x.vector() - ref[k])
        if k < len(ff):
            u = u + ff[k]
        u = agent.clamp(u, x, params)
        x = agent.step(x, u, params)
        traj.append(x)
        controls.append(u)
    return traj, controls
