"""Stochastic firefront field: Bernoulli birth/death, Gauss-Markov motion, box footprints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import Cuboid, bounding_box

HISTORY_POLICIES = ("none", "bounding_box", "last_k")


@dataclass(frozen=True)
class FirefrontKinematics:
    speed: float
    direction: float


@dataclass(frozen=True)
class Firefront:
    id: int
    kinematics: FirefrontKinematics
    center: np.ndarray
    dims: np.ndarray
    born_at: int
    alive: bool = True
    history: tuple = ()

    def footprint(self) -> Cuboid:
        return Cuboid.from_center(self.center, self.dims)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "speed": self.kinematics.speed,
            "direction": self.kinematics.direction,
            "center": self.center.tolist(),
            "dims": self.dims.tolist(),
            "born_at": self.born_at,
            "alive": self.alive,
            "history_len": len(self.history),
        }


@dataclass(frozen=True)
class HazardParams:
    p_birth: float = 0.1
    p_survive: float = 0.75
    mean_speed: float = 3.0
    mean_direction: float = math.pi / 4
    sigma_speed: float = 0.8
    sigma_direction: float = math.pi / 20
    gamma: float = 0.8
    size_range: tuple = (100.0, 250.0)
    arena_lo: tuple = (0.0, 0.0)
    arena_hi: tuple = (1000.0, 1000.0)
    # seconds of motion per propagation (center moves dt * speed)
    dt: float = 1.0
    resample_dims_per_step: bool = False
    history: str = "bounding_box"
    history_k: int = 3

    def __post_init__(self):
        for name in ("p_birth", "p_survive", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        lo, hi = self.size_range
        if not (0 < lo <= hi):
            raise ValueError(f"size_range must satisfy 0 < min <= max, got {self.size_range}")
        if self.sigma_speed < 0 or self.sigma_direction < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if len(self.arena_lo) != len(self.arena_hi) or any(
            a >= b for a, b in zip(self.arena_lo, self.arena_hi)
        ):
            raise ValueError("arena must be a nonempty box")
        if not self.dt > 0:
            raise ValueError("hazard dt must be > 0")
        if self.history not in HISTORY_POLICIES:
            raise ValueError(f"history must be one of {HISTORY_POLICIES}, got {self.history!r}")
        if self.history_k < 1:
            raise ValueError("history_k must be >= 1")

    @property
    def arena(self) -> Cuboid:
        return Cuboid.from_bounds(self.arena_lo, self.arena_hi)

    @property
    def dim(self) -> int:
        return len(self.arena_lo)


def gm_step(
    y: FirefrontKinematics, params: HazardParams, rng: np.random.Generator, noise=None
) -> FirefrontKinematics:
    """One Gauss-Markov update of speed and heading.

    ``noise`` overrides the two standard-normal draws (used by tests).
    """
    g = params.gamma
    if noise is None:
        noise = rng.standard_normal(2)
    scale = math.sqrt(max(0.0, 1.0 - g * g))
    speed = g * y.speed + (1 - g) * params.mean_speed + scale * params.sigma_speed * noise[0]
    direction = (
        g * y.direction + (1 - g) * params.mean_direction + scale * params.sigma_direction * noise[1]
    )
    return FirefrontKinematics(float(speed), float(direction))


def _heading(direction: float, dim: int) -> np.ndarray:
    h = np.zeros(dim)
    h[0] = math.cos(direction)
    h[1] = math.sin(direction)
    return h


def _draw_dims(params: HazardParams, rng) -> np.ndarray:
    lo, hi = params.size_range
    return rng.uniform(lo, hi, size=params.dim)


def spawn(params: HazardParams, rng: np.random.Generator, front_id: int, t: int) -> Firefront:
    """Genesis: uniform center in the arena, kinematics from the stationary law."""
    center = rng.uniform(params.arena_lo, params.arena_hi)
    speed = params.mean_speed + params.sigma_speed * rng.standard_normal()
    direction = params.mean_direction + params.sigma_direction * rng.standard_normal()
    dims = _draw_dims(params, rng)
    front = Firefront(
        id=front_id,
        kinematics=FirefrontKinematics(float(speed), float(direction)),
        center=center,
        dims=dims,
        born_at=t,
    )
    return replace(front, history=(front.footprint(),))


def propagate(front: Firefront, params: HazardParams, rng: np.random.Generator) -> Firefront:
    """Gauss-Markov kinematics, then move the center and record the footprint."""
    kin = gm_step(front.kinematics, params, rng)
    center = front.center + params.dt * kin.speed * _heading(kin.direction, params.dim)
    dims = _draw_dims(params, rng) if params.resample_dims_per_step else front.dims
    moved = replace(front, kinematics=kin, center=center, dims=dims)
    return replace(moved, history=front.history + (moved.footprint(),))


def transition(
    front: Optional[Firefront],
    params: HazardParams,
    rng: np.random.Generator,
    t: int = 0,
    front_id: int = 0,
) -> Optional[Firefront]:
    """Bernoulli transition for one track; ``None`` is the empty state."""
    if front is None or not front.alive:
        if rng.random() < params.p_birth:
            return spawn(params, rng, front_id, t)
        return None
    if rng.random() < params.p_survive:
        return propagate(front, params, rng)
    return None


def advance_field(
    fronts: list,
    t: int,
    params: HazardParams,
    rng: np.random.Generator,
    next_id: Optional[int] = None,
) -> list:
    """Advance every live front one propagation, then make a single birth draw.

    Dead fronts are returned with ``alive=False`` and a frozen history.
    """
    if next_id is None:
        next_id = 1 + max((f.id for f in fronts), default=-1)
    out = []
    for f in fronts:
        if not f.alive:
            out.append(f)
            continue
        nxt = transition(f, params, rng, t)
        out.append(nxt if nxt is not None else replace(f, alive=False))
    born = transition(None, params, rng, t, next_id)
    if born is not None:
        out.append(born)
    return out


def contains(c: Cuboid, p) -> bool:
    return c.contains(p)


def occupied_history(fronts, t: int = 0, policy: str = "bounding_box", k: int = 3) -> list:
    """Avoidance set: footprint history of every live front, optionally compressed."""
    if policy not in HISTORY_POLICIES:
        raise ValueError(f"unknown history policy {policy!r}")
    out = []
    for f in fronts:
        if not f.alive or not f.history:
            continue
        if policy == "none":
            out.extend(f.history)
        elif policy == "last_k":
            out.extend(f.history[-k:])
        else:
            out.append(bounding_box(f.history) if len(f.history) > 1 else f.history[0])
    return out


def distance_to_newest(p, fronts, t: int, since: Optional[int] = None) -> float:
    """Distance from ``p`` to the nearest center of fronts born at ``t``.

    With ``since`` the window widens to births in ``[since, t]``.
    """
    lo = t if since is None else since
    p = np.asarray(p, dtype=float)
    best = math.inf
    for f in fronts:
        if f.alive and lo <= f.born_at <= t:
            best = min(best, float(np.linalg.norm(p - f.center)))
    return best
