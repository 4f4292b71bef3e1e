"""Discrete-time double-integrator agent with linear air drag."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid agent/planner parameters."""


class InputBoundError(ValueError):
    """Control force outside the admissible box."""


@dataclass(frozen=True)
class AgentParams:
    dt: float = 1.0
    drag: float = 0.2
    mass: float = 1.05
    dim: int = 2
    v_max: float = 15.0
    u_max: float = 7.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if not self.mass > 0:
            raise ParameterError(f"mass must be > 0, got {self.mass}")
        if not 0 <= self.drag < 1:
            raise ParameterError(f"drag must lie in [0, 1), got {self.drag}")
        if self.dim not in (2, 3):
            raise ParameterError(f"dim must be 2 or 3, got {self.dim}")
        if not self.v_max > 0:
            raise ParameterError(f"v_max must be > 0, got {self.v_max}")
        if not self.u_max > 0:
            raise ParameterError(f"u_max must be > 0, got {self.u_max}")


@dataclass(frozen=True)
class AgentState:
    position: np.ndarray
    velocity: np.ndarray

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "AgentState":
        x = np.asarray(x, dtype=float)
        d = x.size // 2
        return cls(x[:d].copy(), x[d:].copy())

    @classmethod
    def at_rest(cls, position) -> "AgentState":
        p = np.asarray(position, dtype=float)
        return cls(p.copy(), np.zeros_like(p))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    def __eq__(self, other):
        if not isinstance(other, AgentState):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(
            self.velocity, other.velocity
        )


def build_matrices(params: AgentParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Phi, Gamma)`` with ``x_t = Phi x_{t-1} + Gamma u_t``.

    State ordering is ``[position, velocity]``, each ``dim`` long.
    """
    d = params.dim
    eye = np.eye(d)
    phi = np.block(
        [
            [eye, params.dt * eye],
            [np.zeros((d, d)), (1.0 - params.drag) * eye],
        ]
    )
    gamma = np.vstack([np.zeros((d, d)), (params.dt / params.mass) * eye])
    return phi, gamma


def input_bounds(state: AgentState, params: AgentParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis force interval keeping |u| <= u_max and the next |v| <= v_max."""
    gain = params.dt / params.mass
    coast = (1.0 - params.drag) * np.asarray(state.velocity, dtype=float)
    lo = np.maximum(-params.u_max, (-params.v_max - coast) / gain)
    hi = np.minimum(params.u_max, (params.v_max - coast) / gain)
    # an over-speed state (not reachable from clamped inputs) still gets a usable box
    lo = np.minimum(lo, params.u_max)
    hi = np.maximum(hi, -params.u_max)
    return lo, hi


def clamp(u, state: AgentState, params: AgentParams) -> np.ndarray:
    """Saturate a force per axis so that ``step`` accepts it and v stays bounded."""
    lo, hi = input_bounds(state, params)
    return np.clip(np.asarray(u, dtype=float), lo, hi)


def step(state: AgentState, u, params: AgentParams) -> AgentState:
    u = np.asarray(u, dtype=float)
    if u.shape != (params.dim,):
        raise InputBoundError(f"control must have shape ({params.dim},), got {u.shape}")
    if np.any(np.abs(u) > params.u_max * (1 + 1e-12)):
        raise InputBoundError(f"control {u.tolist()} exceeds u_max={params.u_max}")
    velocity = (1.0 - params.drag) * state.velocity + (params.dt / params.mass) * u
    position = state.position + params.dt * state.velocity
    return AgentState(position, velocity)


def rollout(state: AgentState, controls: Sequence, params: AgentParams) -> list[AgentState]:
    out = []
    for u in controls:
        state = step(state, u, params)
        out.append(state)
    return out
