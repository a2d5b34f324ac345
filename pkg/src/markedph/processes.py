"""Marked Poisson point processes on bounded windows.

Ground points come from a homogeneous Poisson process. Marks are either
drawn i.i.d. (radii, growth-law ids, shape ids) or computed from the
ground configuration through the Matérn type I indicator.

Random streams are derived from one root seed: the stream for
``(window index, seed index)`` is ``SeedSequence(root, spawn_key=keys)``,
so every task can be regenerated on its own and in any order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TextIO, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .kappa import MARK_KINDS, MarkedPointSet
from .windows import Window

# --------------------------------------------------------------------------
# mark distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantDist:
    value: float

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.value))

    def support_max(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict:
        return {"dist": "constant", "value": self.value}


@dataclass(frozen=True)
class UniformDist:
    low: float
    high: float

    def __post_init__(self):
        if not (self.low <= self.high):
            raise ConfigurationError("uniform distribution needs low <= high")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=n)

    def support_max(self) -> float:
        return float(self.high)

    def to_dict(self) -> dict:
        return {"dist": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class DiscreteDist:
    """Finitely many values with probabilities; also used for categorical ids."""

    values: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        w = tuple(float(x) for x in self.weights)
        if not v or len(v) != len(w):
            raise ConfigurationError("discrete distribution needs one weight per value")
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigurationError("discrete weights must be nonnegative and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def categorical(cls, n_categories: int, weights=None) -> "DiscreteDist":
        if weights is None:
            weights = [1.0 / n_categories] * n_categories
        return cls(tuple(range(n_categories)), tuple(weights))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        p = np.asarray(self.weights)
        return np.asarray(self.values)[rng.choice(len(p), size=n, p=p / p.sum())]

    def support_max(self) -> float:
        return max(v for v, w in zip(self.values, self.weights) if w > 0)

    def to_dict(self) -> dict:
        return {"dist": "discrete", "values": list(self.values), "weights": list(self.weights)}


MarkDistribution = Union[ConstantDist, UniformDist, DiscreteDist]


def dist_from_dict(spec: dict) -> MarkDistribution:
    kind = spec.get("dist")
    if kind == "constant":
        return ConstantDist(float(spec["value"]))
    if kind == "uniform":
        return UniformDist(float(spec["low"]), float(spec["high"]))
    if kind in ("discrete", "categorical"):
        if "values" not in spec:
            return DiscreteDist.categorical(len(spec["weights"]), spec["weights"])
        return DiscreteDist(tuple(spec["values"]), tuple(spec["weights"]))
    raise ConfigurationError(f"unknown mark distribution {kind!r}")


# --------------------------------------------------------------------------
# markings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IIDMarking:
    """Marks drawn independently from ``dist``; ``mark_kind`` fixes their meaning."""

    mark_kind: str
    dist: MarkDistribution

    def __post_init__(self):
        if self.mark_kind not in ("radius", "growth", "shape"):
            raise ConfigurationError(f"i.i.d. marks of kind {self.mark_kind!r} are not supported")
        if self.mark_kind != "radius":
            vals = np.asarray(getattr(self.dist, "values", [getattr(self.dist, "value", 0.5)]))
            if isinstance(self.dist, UniformDist) or np.any(vals != np.round(vals)) or np.any(vals < 0):
                raise ConfigurationError(f"{self.mark_kind} ids need a distribution on nonnegative integers")

    @property
    def padding(self) -> float:
        return 0.0

    def to_dict(self) -> dict:
        return {"type": "iid", "mark_kind": self.mark_kind, **self.dist.to_dict()}


def IIDRadius(dist: MarkDistribution) -> IIDMarking:
    return IIDMarking("radius", dist)


def IIDGrowthId(dist: MarkDistribution) -> IIDMarking:
    return IIDMarking("growth", dist)


def IIDShapeId(dist: MarkDistribution) -> IIDMarking:
    return IIDMarking("shape", dist)


@dataclass(frozen=True)
class MaternI:
    """Binary mark: 1 iff another point lies within ``r_exclusion``."""

    r_exclusion: float
    mark_kind: str = field(default="binary", init=False)

    def __post_init__(self):
        if not (self.r_exclusion >= 0 and math.isfinite(self.r_exclusion)):
            raise ConfigurationError("exclusion radius must be a nonnegative real")

    @property
    def padding(self) -> float:
        return float(self.r_exclusion)

    def to_dict(self) -> dict:
        return {"type": "matern_i", "r_exclusion": self.r_exclusion}


Marking = Union[IIDMarking, MaternI]


def marking_from_dict(spec: dict) -> Marking:
    if spec.get("type") == "matern_i":
        return MaternI(float(spec["r_exclusion"]))
    if spec.get("type") == "iid":
        rest = {k: v for k, v in spec.items() if k not in ("type", "mark_kind")}
        return IIDMarking(spec.get("mark_kind", "radius"), dist_from_dict(rest))
    raise ConfigurationError(f"unknown marking {spec.get('type')!r}")


@dataclass(frozen=True)
class ProcessSpec:
    intensity: float
    marking: Marking
    seed: int = 0

    def __post_init__(self):
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise ConfigurationError("intensity must be a positive real")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {"intensity": self.intensity, "marking": self.marking.to_dict(), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, spec: dict) -> "ProcessSpec":
        return cls(float(spec["intensity"]), marking_from_dict(spec["marking"]), int(spec.get("seed", 0)))


@dataclass(frozen=True)
class SampleRecord:
    spec: ProcessSpec
    window: Window
    points: MarkedPointSet


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------


def derive_seed(root: int, *keys: int) -> int:
    """Counter-based child seed for the task identified by ``keys``."""
    ss = np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _uniform_in(window: Window, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = window.bounding_box()
    out = np.empty((0, window.dim))
    while len(out) < n:
        # rejection from the bounding box; for boxes this also guards the
        # (rounding-only) case lo + (hi - lo) * u == hi
        cand = lo + (hi - lo) * rng.random((n - len(out), window.dim))
        out = np.vstack([out, cand[window.contains(cand)]])
    return out


def sample_poisson_ground(intensity: float, window: Window, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson points in ``window`` as an ``(n, d)`` array."""
    vol = window.volume()
    if not math.isfinite(vol):
        raise ValueError("window must be bounded")
    if vol == 0:
        return np.zeros((0, window.dim))
    n = int(rng.poisson(intensity * vol))
    pts = _uniform_in(window, n, rng)
    # coincident points have probability zero; redraw them if they occur
    while n > 1:
        _, first = np.unique(pts, axis=0, return_index=True)
        if len(first) == n:
            break
        dup = np.setdiff1d(np.arange(n), first)
        pts[dup] = _uniform_in(window, len(dup), rng)
    return pts


def attach_iid_marks(positions, marking: IIDMarking, rng: np.random.Generator, dim: int | None = None) -> MarkedPointSet:
    pos = np.asarray(positions, dtype=np.float64)
    if dim is None:
        dim = pos.shape[1] if pos.ndim == 2 else 1
    pos = pos.reshape(-1, dim)
    marks = marking.dist.sample(len(pos), rng)
    return MarkedPointSet(pos, marks, marking.mark_kind, dim=dim)


def matern_I_marks(positions, r_exclusion: float, dim: int | None = None) -> MarkedPointSet:
    """Flag every point that has another point within distance ``r_exclusion``."""
    if r_exclusion < 0:
        raise ValueError("exclusion radius must be nonnegative")
    pos = np.asarray(positions, dtype=np.float64)
    if dim is None:
        dim = pos.shape[1] if pos.ndim == 2 else 1
    pos = pos.reshape(-1, dim)
    marks = np.zeros(len(pos))
    if len(pos) > 1:
        pairs = cKDTree(pos).query_pairs(r_exclusion, output_type="ndarray")
        marks[pairs.reshape(-1)] = 1.0
    return MarkedPointSet(pos, marks, "binary", dim=dim)


def thinned(phi: MarkedPointSet) -> MarkedPointSet:
    """The points of a Matérn-marked set whose mark is 0."""
    return phi.subset(np.flatnonzero(phi.marks == 0))


def restrict(phi: MarkedPointSet, region: Window) -> MarkedPointSet:
    if len(phi) == 0:
        return phi
    return phi.subset(np.flatnonzero(region.contains(phi.positions)))


def sample_marked_process(spec: ProcessSpec, window: Window, seed: int | None = None) -> SampleRecord:
    """Sample the marked process restricted to ``window``.

    Dependent marks are computed on ``window`` padded by the exclusion
    radius and then restricted, so marks inside the window agree with those
    of the unrestricted process.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    if isinstance(spec.marking, MaternI):
        big = window.padded(spec.marking.padding)
        pts = sample_poisson_ground(spec.intensity, big, rng)
        phi = restrict(matern_I_marks(pts, spec.marking.r_exclusion, dim=window.dim), window)
    else:
        pts = sample_poisson_ground(spec.intensity, window, rng)
        phi = attach_iid_marks(pts, spec.marking, rng, dim=window.dim)
    return SampleRecord(spec, window, phi)


# --------------------------------------------------------------------------
# sample CSV
# --------------------------------------------------------------------------


def write_sample_csv(phi: MarkedPointSet, fh: TextIO) -> None:
    d = phi.dim
    fh.write(",".join([f"x{i + 1}" for i in range(d)] + ["mark_kind", "mark_value"]) + "\n")
    for p, m in zip(phi.positions.tolist(), phi.marks.tolist()):
        fh.write(",".join(repr(float(x)) for x in p) + f",{phi.mark_kind},{m!r}\n")


def read_sample_csv(fh: TextIO) -> MarkedPointSet:
    reader = csv.reader(fh)
    header = next(reader, None)
    if not header or header[-2:] != ["mark_kind", "mark_value"]:
        raise ValueError("line 1: expected header x1,...,xd,mark_kind,mark_value")
    d = len(header) - 2
    pos, marks, kinds = [], [], set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != d + 2 or row[-2] not in MARK_KINDS:
            raise ValueError(f"line {lineno}: malformed sample row {row!r}")
        try:
            pos.append([float(x) for x in row[:d]])
            marks.append(float(row[-1]))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed sample row {row!r}") from None
        kinds.add(row[-2])
    if len(kinds) > 1:
        raise ValueError("sample file mixes mark kinds")
    return MarkedPointSet(np.asarray(pos).reshape(-1, d), marks, kinds.pop() if kinds else "radius", dim=d)
