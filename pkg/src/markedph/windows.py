"""Bounded convex observation windows.

Boxes (and cubes) are half-open, ``[lo, hi)``, so that lattice cells of the
form ``[z - M/2, z + M/2)`` tile space without overlap. Balls are closed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


class Window:
    """Base class; subclasses provide the geometry."""

    dim: int

    def volume(self) -> float:
        raise NotImplementedError

    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def inradius(self) -> float:
        raise NotImplementedError

    def padded(self, h: float) -> "Box":
        """An axis-aligned box containing every point within ``h`` of the window."""
        lo, hi = self.bounding_box()
        return Box(tuple((lo - h).tolist()), tuple((hi + h).tolist()))

    @property
    def label(self) -> str:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Box(Window):
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lo)
        hi = tuple(float(x) for x in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box corners must have the same positive dimension")
        if not all(math.isfinite(a) and math.isfinite(b) and a <= b for a, b in zip(lo, hi)):
            raise ValueError(f"unbounded or inverted box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        return np.all((p >= np.asarray(self.lo)) & (p < np.asarray(self.hi)), axis=1)

    def bounding_box(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def inradius(self) -> float:
        return float(self.sides.min()) / 2.0

    @property
    def label(self) -> str:
        return "box[" + ",".join(f"{a:g}:{b:g}" for a, b in zip(self.lo, self.hi)) + "]"

    def to_dict(self) -> dict:
        return {"shape": "box", "lo": list(self.lo), "hi": list(self.hi)}


class Cube(Box):
    """Centred cube ``[c - L/2, c + L/2)^d``."""

    def __init__(self, side: float, dim: int, center=None):
        if not (side >= 0 and math.isfinite(side)):
            raise ValueError("cube side must be a nonnegative real")
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
        super().__init__(tuple((c - side / 2).tolist()), tuple((c + side / 2).tolist()))
        object.__setattr__(self, "side", float(side))
        object.__setattr__(self, "center", tuple(c.tolist()))

    def __repr__(self) -> str:
        return f"Cube(side={self.side:g}, dim={self.dim})"

    @property
    def label(self) -> str:
        return f"cube_L{self.side:g}_d{self.dim}"

    def to_dict(self) -> dict:
        return {"shape": "cube", "side": self.side, "dim": self.dim, "center": list(self.center)}


@dataclass(frozen=True)
class Ball(Window):
    radius: float
    dim: int
    center: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError("ball radius must be a nonnegative real")
        c = tuple(float(x) for x in self.center) or (0.0,) * self.dim
        if len(c) != self.dim:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", c)

    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, self.dim) - np.asarray(self.center)
        return np.einsum("ij,ij->i", p, p) <= self.radius**2

    def bounding_box(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def inradius(self) -> float:
        return self.radius

    @property
    def label(self) -> str:
        return f"ball_r{self.radius:g}_d{self.dim}"

    def to_dict(self) -> dict:
        return {"shape": "ball", "radius": self.radius, "dim": self.dim, "center": list(self.center)}


def window_from_dict(spec: dict) -> Window:
    shape = spec.get("shape")
    if shape == "cube":
        return Cube(float(spec["side"]), int(spec["dim"]), spec.get("center"))
    if shape == "box":
        return Box(tuple(spec["lo"]), tuple(spec["hi"]))
    if shape == "ball":
        return Ball(float(spec["radius"]), int(spec["dim"]), tuple(spec.get("center", ())))
    raise ValueError(f"unknown window shape {shape!r}")
