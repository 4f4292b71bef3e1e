"""Attention-driven supervisor: which planner gets control at each tick.

Three attributes are scored: response time, mission time and energy. Their
Dirichlet concentrations follow sigmoid profiles of the time-step and of the
distance to freshly emerged hazards; a categorical draw picks one attribute,
and a leaky two-state score integrates the matching column of the
performance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SYSTEM_FAST = 1
SYSTEM_DELIBERATIVE = 2

# B in Psi_t = H Psi_{t-1} + B Q A_t
_DISPARITY = np.array([[1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class AttentionWeights:
    w1a: float = 40.0
    w1b: float = 0.02
    w1c: float = 9.0
    w1d: float = 1.0
    w2a: float = 10.0
    w2b: float = 0.05
    w2c: float = 7.0
    w2d: float = 1.0
    w3a: float = 10.0
    w3b: float = 0.15
    w3c: float = 7.0
    w3d: float = 1.0

    def __post_init__(self):
        for i in (1, 2, 3):
            for s in "cd":
                v = getattr(self, f"w{i}{s}")
                if not v > 0:
                    raise ValueError(f"w{i}{s} must be > 0, got {v}")


DEFAULT_PERFORMANCE = ((0.8, 0.5, 0.3), (0.4, 0.9, 0.9))


@dataclass
class AttentionState:
    xi: np.ndarray
    probs: np.ndarray
    attention: np.ndarray

    @property
    def index(self) -> int:
        """0-based index of the attended attribute."""
        return int(np.argmax(self.attention))


@dataclass
class DecisionState:
    psi: np.ndarray = field(default_factory=lambda: np.zeros(2))
    active: int = SYSTEM_DELIBERATIVE


def _logistic(c: float, a: float, b: float, x: float) -> float:
    # c / (1 + a * exp(-b (x - a))), overflow-safe
    z = -b * (x - a)
    if z > 700.0:
        return 0.0
    return c / (1.0 + a * math.exp(z))


def xi(t: float, d_t: float, w: AttentionWeights = AttentionWeights()) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be >= 0")
    if math.isinf(d_t):
        xi1 = w.w1d
    else:
        xi1 = w.w1c - _logistic(w.w1c, w.w1a, w.w1b, d_t) + w.w1d
    xi2 = w.w2c - _logistic(w.w2c, w.w2a, w.w2b, t) + w.w2d
    xi3 = _logistic(w.w3c, w.w3a, w.w3b, t) + w.w3d
    return np.array([xi1, xi2, xi3])


def sample_dirichlet(xi_vec, rng: np.random.Generator) -> np.ndarray:
    """Normalised independent Gamma(xi_a, 1) draws."""
    xi_vec = np.asarray(xi_vec, dtype=float)
    if np.any(xi_vec <= 0):
        raise ValueError("Dirichlet parameters must be > 0")
    g = rng.standard_gamma(xi_vec)
    total = g.sum()
    if total <= 0.0:
        # every gamma draw underflowed; only possible for tiny shapes
        p = np.zeros_like(xi_vec)
        p[int(np.argmax(xi_vec))] = 1.0
        return p
    return g / total


def sample_attention(p, rng: np.random.Generator) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    idx = min(idx, p.size - 1)
    # never land on a zero-probability slot through rounding at the cdf edge
    while p[idx] == 0.0 and idx > 0:
        idx -= 1
    a = np.zeros(p.size)
    a[idx] = 1.0
    return a


def disparity(q) -> np.ndarray:
    """B Q: how much each system beats the other on each attribute."""
    return _DISPARITY @ np.asarray(q, dtype=float)


def psi_step(psi, q, h, a) -> np.ndarray:
    return np.asarray(h, dtype=float) @ np.asarray(psi, dtype=float) + disparity(q) @ np.asarray(
        a, dtype=float
    )


def select(psi, previous: int = SYSTEM_DELIBERATIVE) -> int:
    """Argmax of the score; an exact tie keeps the previous system."""
    if psi[0] > psi[1]:
        return SYSTEM_FAST
    if psi[1] > psi[0]:
        return SYSTEM_DELIBERATIVE
    return previous


def attend(t, d_t, weights, rng) -> AttentionState:
    x = xi(t, d_t, weights)
    p = sample_dirichlet(x, rng)
    a = sample_attention(p, rng)
    return AttentionState(x, p, a)


def decide(state: DecisionState, att: AttentionState, q, h) -> DecisionState:
    psi = psi_step(state.psi, q, h, att.attention)
    return DecisionState(psi, select(psi, state.active))
