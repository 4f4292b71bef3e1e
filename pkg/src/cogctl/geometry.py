"""Convex cuboids as half-space sets ``{p : dot(normal_l, p) <= offset_l}``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cuboid:
    """Parallelepiped with faces stored in antiparallel pairs ``(2k, 2k+1)``."""

    normals: np.ndarray  # (2*dim, dim)
    offsets: np.ndarray  # (2*dim,)

    def __post_init__(self):
        a = np.asarray(self.normals, dtype=float)
        b = np.asarray(self.offsets, dtype=float)
        object.__setattr__(self, "normals", a)
        object.__setattr__(self, "offsets", b)
        if a.ndim != 2 or a.shape[0] != 2 * a.shape[1] or b.shape != (a.shape[0],):
            raise ValueError(f"bad half-space shapes {a.shape}, {b.shape}")
        if not np.allclose(np.linalg.norm(a, axis=1), 1.0):
            raise ValueError("face normals must be unit vectors")
        if not np.allclose(a[0::2], -a[1::2]):
            raise ValueError("opposite face normals must be antiparallel")
        if abs(np.linalg.det(a[0::2])) < 1e-9:
            raise ValueError("face normals do not span space; region unbounded")
        if np.any(b[0::2] + b[1::2] < 0):
            raise ValueError("empty cuboid")

    @classmethod
    def from_bounds(cls, lo, hi) -> "Cuboid":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        d = lo.size
        normals = np.zeros((2 * d, d))
        offsets = np.zeros(2 * d)
        for k in range(d):
            normals[2 * k, k] = 1.0
            normals[2 * k + 1, k] = -1.0
            offsets[2 * k] = hi[k]
            offsets[2 * k + 1] = -lo[k]
        return cls(normals, offsets)

    @classmethod
    def from_center(cls, center, size) -> "Cuboid":
        c = np.asarray(center, dtype=float)
        h = 0.5 * np.asarray(size, dtype=float)
        return cls.from_bounds(c - h, c + h)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def num_faces(self) -> int:
        return self.normals.shape[0]

    def contains(self, p) -> bool:
        return bool(np.all(self.normals @ np.asarray(p, dtype=float) <= self.offsets))

    def vertices(self) -> np.ndarray:
        d = self.dim
        rows = []
        for choice in itertools.product((0, 1), repeat=d):
            idx = [2 * k + c for k, c in enumerate(choice)]
            rows.append(np.linalg.solve(self.normals[idx], self.offsets[idx]))
        return np.array(rows)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box ``(lo, hi)``."""
        v = self.vertices()
        return v.min(axis=0), v.max(axis=0)

    @property
    def center(self) -> np.ndarray:
        return self.vertices().mean(axis=0)

    def distance(self, p) -> float:
        """Euclidean distance from ``p`` to the region (0 inside), axis-aligned boxes."""
        lo, hi = self.bounds()
        p = np.asarray(p, dtype=float)
        gap = np.maximum(0.0, np.maximum(lo - p, p - hi))
        return float(np.linalg.norm(gap))

    def to_dict(self) -> dict:
        return {"normals": self.normals.tolist(), "offsets": self.offsets.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Cuboid":
        return cls(np.array(d["normals"], dtype=float), np.array(d["offsets"], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, Cuboid):
            return NotImplemented
        return np.array_equal(self.normals, other.normals) and np.array_equal(
            self.offsets, other.offsets
        )

    def __hash__(self):
        return hash((self.normals.tobytes(), self.offsets.tobytes()))


def bounding_box(cuboids) -> Cuboid:
    los, his = zip(*(c.bounds() for c in cuboids))
    return Cuboid.from_bounds(np.min(los, axis=0), np.max(his, axis=0))


def stack(cuboids) -> tuple[np.ndarray, np.ndarray]:
    """Pack cuboids into arrays ``(k, 2d, d)`` and ``(k, 2d)`` for vectorised tests."""
    if not cuboids:
        return np.zeros((0, 0, 0)), np.zeros((0, 0))
    return (
        np.stack([c.normals for c in cuboids]),
        np.stack([c.offsets for c in cuboids]),
    )


def points_in_any(points: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Boolean mask over ``points`` (n, d): inside at least one packed cuboid."""
    points = np.atleast_2d(points)
    if normals.shape[0] == 0:
        return np.zeros(points.shape[0], dtype=bool)
    # (k, n, 2d)
    proj = np.einsum("kfd,nd->knf", normals, points)
    inside = np.all(proj <= offsets[:, None, :], axis=2)
    return inside.any(axis=0)
