"""Marked point sets and the filtration functions κ built on them.

A filtration function assigns a birth time to every finite set of marked
points. Five kinds are provided:

``cech_radii`` / ``rips_radii``
    marks are initial radii ``r`` in ``[0, R]``; balls grow as ``t + r``.
``cech_growth`` / ``rips_growth``
    marks index a registered family of growth laws ``r_i(t)``.
``cech_shape``
    marks index a registered family of convex shapes grown as ``t * C``.

All of them satisfy monotonicity under inclusion, translation invariance
and the pairwise diameter bound ``|x - y| <= rho(kappa({x, y}))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from . import _minimax
from ._backend import kernels
from .errors import ConfigurationError, SimplicityError

# --------------------------------------------------------------------------
# marks and point sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Radius:
    r: float


@dataclass(frozen=True)
class GrowthFn:
    id: int


@dataclass(frozen=True)
class Shape:
    id: int


@dataclass(frozen=True)
class Binary:
    b: int


Mark = Union[Radius, GrowthFn, Shape, Binary]

MARK_KINDS = ("radius", "growth", "shape", "binary")
_MARK_TYPES = {Radius: "radius", GrowthFn: "growth", Shape: "shape", Binary: "binary"}


def _mark_value(mark: Mark) -> float:
    if isinstance(mark, Radius):
        return float(mark.r)
    if isinstance(mark, Binary):
        return float(mark.b)
    return float(mark.id)


def make_mark(kind: str, value: float) -> Mark:
    if kind == "radius":
        return Radius(float(value))
    if kind == "growth":
        return GrowthFn(int(value))
    if kind == "shape":
        return Shape(int(value))
    if kind == "binary":
        return Binary(int(value))
    raise ConfigurationError(f"unknown mark kind {kind!r}")


@dataclass(frozen=True)
class MarkedPoint:
    position: tuple[float, ...]
    mark: Mark


class MarkedPointSet:
    """A finite simple marked point set: distinct positions, one mark each.

    Positions are stored as an ``(n, d)`` float array and marks as an
    ``(n,)`` float array interpreted according to ``mark_kind``.
    """

    def __init__(self, positions, marks, mark_kind: str, dim: int | None = None):
        if mark_kind not in MARK_KINDS:
            raise ConfigurationError(f"unknown mark kind {mark_kind!r}")
        pos = np.asarray(positions, dtype=np.float64)
        if pos.size == 0:
            if dim is None:
                dim = pos.shape[1] if pos.ndim == 2 else 1
            pos = pos.reshape(0, dim)
        elif pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if pos.ndim != 2:
            raise ValueError("positions must be an (n, d) array")
        if dim is not None and pos.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, got {pos.shape[1]}")
        if pos.shape[1] < 1:
            raise ValueError("dimension must be positive")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        mk = np.asarray(marks, dtype=np.float64).reshape(-1)
        if len(mk) != len(pos):
            raise ValueError("one mark per point is required")
        if len(pos) > 1 and len(np.unique(pos, axis=0)) != len(pos):
            raise SimplicityError()
        pos.setflags(write=False)
        mk.setflags(write=False)
        self.positions = pos
        self.marks = mk
        self.mark_kind = mark_kind

    @classmethod
    def from_points(cls, points: Iterable[MarkedPoint], dim: int | None = None) -> "MarkedPointSet":
        points = list(points)
        if not points:
            return cls(np.zeros((0, dim or 1)), [], "radius", dim=dim)
        kinds = {_MARK_TYPES[type(p.mark)] for p in points}
        if len(kinds) != 1:
            raise ConfigurationError("all marks in a point set must be of one kind")
        return cls(
            [p.position for p in points],
            [_mark_value(p.mark) for p in points],
            kinds.pop(),
            dim=dim,
        )

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> MarkedPoint:
        return MarkedPoint(tuple(self.positions[i].tolist()), make_mark(self.mark_kind, self.marks[i]))

    def __iter__(self) -> Iterator[MarkedPoint]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices) -> "MarkedPointSet":
        idx = np.asarray(indices, dtype=np.int64)
        return MarkedPointSet(self.positions[idx], self.marks[idx], self.mark_kind, dim=self.dim)

    def translated(self, shift) -> "MarkedPointSet":
        return MarkedPointSet(self.positions + np.asarray(shift, dtype=np.float64), self.marks, self.mark_kind)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MarkedPointSet):
            return NotImplemented
        return (
            self.mark_kind == other.mark_kind
            and self.positions.shape == other.positions.shape
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.marks, other.marks)
        )

    def __repr__(self) -> str:
        return f"MarkedPointSet(n={len(self)}, d={self.dim}, mark_kind={self.mark_kind!r})"


# --------------------------------------------------------------------------
# registered mark families
# --------------------------------------------------------------------------

_GROWTH_PARAMS = {
    "linear": ("c",),
    "affine": ("b", "c"),
    "power": ("c", "p"),
    "saturating": ("b", "a", "tau"),
}


@dataclass(frozen=True)
class GrowthFunction:
    """A right-continuous, strictly increasing growth law ``t -> r(t)``.

    ``linear``: ``c*t``; ``affine``: ``b + c*t``; ``power``: ``c*t**p``;
    ``saturating``: ``b + a*(1 - exp(-t/tau))`` (bounded by ``a + b``).
    """

    name: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.name not in _GROWTH_PARAMS:
            raise ConfigurationError(f"unknown growth law {self.name!r}")
        keys = tuple(k for k, _ in self.params)
        if sorted(keys) != sorted(_GROWTH_PARAMS[self.name]):
            raise ConfigurationError(f"growth law {self.name!r} needs parameters {_GROWTH_PARAMS[self.name]}")
        p = self.param_dict
        if any(not math.isfinite(v) for v in p.values()):
            raise ConfigurationError("growth parameters must be finite")
        if p.get("b", 0.0) < 0:
            raise ConfigurationError("growth law must satisfy r(0) >= 0")
        for key in ("c", "p", "a", "tau"):
            if key in p and p[key] <= 0:
                raise ConfigurationError(f"growth parameter {key} must be positive")

    @classmethod
    def create(cls, name: str, **params: float) -> "GrowthFunction":
        return cls(name, tuple(sorted((k, float(v)) for k, v in params.items())))

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def __call__(self, t: float) -> float:
        p = self.param_dict
        if self.name == "linear":
            return p["c"] * t
        if self.name == "affine":
            return p["b"] + p["c"] * t
        if self.name == "power":
            return p["c"] * t ** p["p"]
        return p["b"] + p["a"] * -math.expm1(-t / p["tau"])

    def inverse(self, y: float) -> float:
        """Generalised inverse ``inf{s >= 0 : r(s) >= y}`` by bisection."""
        return _minimax.generalized_inverse(self, y)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.param_dict}


class ConvexShape:
    """Bounded convex set symmetric about and containing 0 in its interior."""

    kind = ""

    def gauge(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self, dim: int) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Box(ConvexShape):
    """Axis-aligned box ``[-a_1, a_1] x ... x [-a_d, a_d]``."""

    half_widths: tuple[float, ...]
    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "half_widths", tuple(float(a) for a in self.half_widths))
        if not self.half_widths or min(self.half_widths) <= 0:
            raise ConfigurationError("box half-widths must be positive")

    def gauge(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != len(self.half_widths):
            raise ConfigurationError("box dimension does not match the points")
        return np.max(np.abs(z) / np.asarray(self.half_widths), axis=-1)

    def diameter(self, dim: int) -> float:
        return 2.0 * math.sqrt(sum(a * a for a in self.half_widths))

    def to_dict(self) -> dict:
        return {"type": "box", "half_widths": list(self.half_widths)}


@dataclass(frozen=True)
class EuclideanBall(ConvexShape):
    radius: float
    kind = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("ball radius must be positive")

    def gauge(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.linalg.norm(z, axis=-1) / self.radius

    def diameter(self, dim: int) -> float:
        return 2.0 * self.radius

    def to_dict(self) -> dict:
        return {"type": "ball", "radius": self.radius}


@dataclass(frozen=True)
class L1Ball(ConvexShape):
    radius: float
    kind = "l1"

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("l1-ball radius must be positive")

    def gauge(self, z):
        z = np.asarray(z, dtype=np.float64)
        return np.sum(np.abs(z), axis=-1) / self.radius

    def diameter(self, dim: int) -> float:
        return 2.0 * self.radius

    def to_dict(self) -> dict:
        return {"type": "l1", "radius": self.radius}


def shape_from_dict(spec: dict) -> ConvexShape:
    kind = spec.get("type")
    if kind == "box":
        return Box(tuple(spec["half_widths"]))
    if kind == "ball":
        return EuclideanBall(float(spec["radius"]))
    if kind == "l1":
        return L1Ball(float(spec["radius"]))
    raise ConfigurationError(f"unknown shape type {kind!r}")


def growth_from_dict(spec: dict) -> GrowthFunction:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name is None:
        raise ConfigurationError("growth law needs a name")
    return GrowthFunction.create(name, **spec)


# --------------------------------------------------------------------------
# κ evaluation
# --------------------------------------------------------------------------

KAPPA_KINDS = ("cech_radii", "rips_radii", "cech_growth", "rips_growth", "cech_shape")
_MARK_KIND_OF = {
    "cech_radii": "radius",
    "rips_radii": "radius",
    "cech_growth": "growth",
    "rips_growth": "growth",
    "cech_shape": "shape",
}


def _pair_dist(x: np.ndarray, y: np.ndarray) -> float:
    return math.sqrt(float(np.sum((x - y) ** 2)))


def _centred(pos: np.ndarray) -> np.ndarray:
    return pos - pos.mean(axis=0)


def _cech_radii(pos: np.ndarray, radii: np.ndarray) -> float:
    n = len(pos)
    if n == 1:
        return 0.0
    if n == 2:
        return max(_pair_dist(pos[0], pos[1]) - radii[0] - radii[1], 0.0) / 2.0
    return max(float(kernels.smallest_intersecting_ball(_centred(pos), radii)), 0.0)


def _rips_radii(pos: np.ndarray, radii: np.ndarray) -> float:
    best = 0.0
    for i, j in itertools.combinations(range(len(pos)), 2):
        best = max(best, (_pair_dist(pos[i], pos[j]) - radii[i] - radii[j]) / 2.0)
    return best


def _balls_intersect(pos: np.ndarray, radii) -> bool:
    if len(pos) == 1:
        return True
    if len(pos) == 2:
        return _pair_dist(pos[0], pos[1]) <= radii[0] + radii[1]
    return float(kernels.smallest_intersecting_ball(pos, np.asarray(radii, dtype=np.float64))) <= 0.0


def _growth_pair(fa: GrowthFunction, fb: GrowthFunction, dist: float) -> float:
    return _minimax.generalized_inverse(lambda s: fa(s) + fb(s), dist)


def _cech_growth(pos: np.ndarray, fns: Sequence[GrowthFunction]) -> float:
    n = len(pos)
    if n == 1:
        return fns[0].inverse(0.0)
    if n == 2:
        return _growth_pair(fns[0], fns[1], _pair_dist(pos[0], pos[1]))
    c = _centred(pos)
    return _minimax.first_true(lambda t: _balls_intersect(c, [f(t) for f in fns]))


def _rips_growth(pos: np.ndarray, fns: Sequence[GrowthFunction]) -> float:
    if len(pos) == 1:
        return fns[0].inverse(0.0)
    best = 0.0
    for i, j in itertools.combinations(range(len(pos)), 2):
        best = max(best, _growth_pair(fns[i], fns[j], _pair_dist(pos[i], pos[j])))
    return best


def _shape_objective(pos: np.ndarray, shapes: Sequence[ConvexShape], w: np.ndarray) -> float:
    return max(float(s.gauge(w - x)) for s, x in zip(shapes, pos))


def _cech_shape(pos: np.ndarray, shapes: Sequence[ConvexShape]) -> float:
    n, d = pos.shape
    if n == 1:
        return 0.0
    kinds = {s.kind for s in shapes}
    if kinds == {"box"}:
        a = np.array([s.half_widths for s in shapes])
        best = 0.0
        for i, j in itertools.combinations(range(n), 2):
            best = max(best, float(np.max(np.abs(pos[i] - pos[j]) / (a[i] + a[j]))))
        return best
    if n == 2 and len(kinds) == 1:
        # Minkowski sums of two balls of one norm are balls of that norm
        s0, s1 = shapes
        z = pos[1] - pos[0]
        if s0.kind == "ball":
            return float(np.linalg.norm(z)) / (s0.radius + s1.radius)
        return float(np.sum(np.abs(z))) / (s0.radius + s1.radius)
    c = _centred(pos)
    if kinds == {"ball"}:
        a = np.array([s.radius for s in shapes])
        return _minimax.first_true(lambda t: _balls_intersect(c, a * t))
    return _shape_barrier(c, shapes)


def _shape_barrier(pos: np.ndarray, shapes: Sequence[ConvexShape]) -> float:
    n, d = pos.shape
    rows, rhs, soc_x, soc_a = [], [], [], []
    for x, s in zip(pos, shapes):
        if s.kind == "ball":
            soc_x.append(x)
            soc_a.append(s.radius)
            continue
        if s.kind == "box":
            if len(s.half_widths) != d:
                raise ConfigurationError("box dimension does not match the points")
            dirs = []
            for k, a in enumerate(s.half_widths):
                e = np.zeros(d)
                e[k] = 1.0 / a
                dirs += [e, -e]
        else:
            dirs = [np.array(sg) / s.radius for sg in itertools.product((-1.0, 1.0), repeat=d)]
        for g in dirs:
            rows.append(np.append(g, -1.0))
            rhs.append(float(g @ x))
    w0 = np.zeros(d)
    scale = max(1.0, float(np.max(np.abs(pos))))
    t0 = 1.5 * _shape_objective(pos, shapes, w0) + 1e-3 * scale
    z = _minimax.minimax_barrier(
        np.array(rows).reshape(-1, d + 1),
        np.array(rhs),
        np.array(soc_x).reshape(-1, d),
        np.array(soc_a),
        np.append(w0, t0),
        gap_tol=1e-13 * scale,
    )
    return _shape_objective(pos, shapes, z[:d])


@dataclass(frozen=True)
class FiltrationFunction:
    """A filtration function κ together with its growth bound ρ.

    Parameters
    ----------
    kind
        One of ``KAPPA_KINDS``.
    radius_cap
        Cap ``R`` on radius marks (radius kinds only).
    growth
        Registered growth laws, indexed by growth marks.
    shapes
        Registered convex shapes, indexed by shape marks.
    """

    kind: str
    radius_cap: float = 0.0
    growth: tuple[GrowthFunction, ...] = field(default=())
    shapes: tuple[ConvexShape, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KAPPA_KINDS:
            raise ConfigurationError(f"unknown filtration kind {self.kind!r}")
        object.__setattr__(self, "growth", tuple(self.growth))
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if self.kind.endswith("radii"):
            if not (math.isfinite(self.radius_cap) and self.radius_cap >= 0):
                raise ConfigurationError("radius cap must be a nonnegative real")
        if self.kind.endswith("growth") and not self.growth:
            raise ConfigurationError("growth kinds need a nonempty growth family")
        if self.kind == "cech_shape" and not self.shapes:
            raise ConfigurationError("cech_shape needs a nonempty shape family")

    @property
    def mark_kind(self) -> str:
        return _MARK_KIND_OF[self.kind]

    def check_marks(self, marks: np.ndarray, mark_kind: str, dim: int | None = None) -> None:
        if mark_kind != self.mark_kind:
            raise ConfigurationError(f"{self.kind} needs {self.mark_kind} marks, got {mark_kind}")
        marks = np.asarray(marks)
        if len(marks) == 0:
            return
        if self.mark_kind == "radius":
            if marks.min() < 0 or marks.max() > self.radius_cap:
                raise ConfigurationError(f"radius marks must lie in [0, {self.radius_cap}]")
            return
        family = self.growth if self.mark_kind == "growth" else self.shapes
        ids = marks.astype(np.int64)
        if np.any(ids != marks) or ids.min() < 0 or ids.max() >= len(family):
            raise ConfigurationError(f"unregistered {self.mark_kind} id in marks")
        if self.kind == "cech_shape" and dim is not None:
            for i in np.unique(ids):
                s = self.shapes[i]
                if isinstance(s, Box) and len(s.half_widths) != dim:
                    raise ConfigurationError("box dimension does not match the points")

    def value(self, positions, marks) -> float:
        """κ of the marked set given as arrays (no mark validation)."""
        pos = np.asarray(positions, dtype=np.float64)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if len(pos) == 0:
            raise ValueError("κ is defined on nonempty sets only")
        marks = np.asarray(marks, dtype=np.float64)
        if self.kind == "cech_radii":
            return _cech_radii(pos, marks)
        if self.kind == "rips_radii":
            return _rips_radii(pos, marks)
        if self.kind == "cech_shape":
            return _cech_shape(pos, [self.shapes[int(m)] for m in marks])
        fns = [self.growth[int(m)] for m in marks]
        if self.kind == "cech_growth":
            return _cech_growth(pos, fns)
        return _rips_growth(pos, fns)

    def __call__(self, sigma: MarkedPointSet | Sequence[MarkedPoint]) -> float:
        if not isinstance(sigma, MarkedPointSet):
            sigma = MarkedPointSet.from_points(sigma)
        self.check_marks(sigma.marks, sigma.mark_kind, sigma.dim)
        return self.value(sigma.positions, sigma.marks)

    def values(self, positions: np.ndarray, marks: np.ndarray, simplices: np.ndarray) -> np.ndarray:
        """κ on many vertex subsets of one point set; rows of ``simplices`` index points."""
        simplices = np.asarray(simplices, dtype=np.int64)
        if len(simplices) == 0:
            return np.zeros(0)
        k = simplices.shape[1]
        if k == 2 and self.kind.endswith("radii"):
            diff = positions[simplices[:, 0]] - positions[simplices[:, 1]]
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            r = marks[simplices]
            return np.maximum(dist - r[:, 0] - r[:, 1], 0.0) / 2.0
        if self.kind == "cech_radii":
            vals = kernels.smallest_intersecting_ball_batch(positions, marks, simplices)
            return np.maximum(np.asarray(vals), 0.0)
        if self.kind == "rips_radii":
            best = np.zeros(len(simplices))
            for i, j in itertools.combinations(range(k), 2):
                a, b = simplices[:, i], simplices[:, j]
                diff = positions[a] - positions[b]
                dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
                best = np.maximum(best, (dist - marks[a] - marks[b]) / 2.0)
            return best
        return np.array([self.value(positions[row], marks[row]) for row in simplices])

    def rho(self, t: float) -> float:
        """Diameter bound: ``|x - y| <= rho(kappa({x, y}))`` for every pair."""
        if t < 0:
            raise ValueError("rho is defined for t >= 0")
        if math.isinf(t):
            return math.inf
        if self.kind.endswith("radii"):
            return 2.0 * t + 2.0 * self.radius_cap
        if self.kind.endswith("growth"):
            return 2.0 * max(f(t) for f in self.growth)
        return 2.0 * t * max(s.diameter(0) for s in self.shapes)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind.endswith("radii"):
            out["radius_cap"] = self.radius_cap
        if self.growth:
            out["growth"] = [g.to_dict() for g in self.growth]
        if self.shapes:
            out["shapes"] = [s.to_dict() for s in self.shapes]
        return out

    @classmethod
    def from_dict(cls, spec: dict) -> "FiltrationFunction":
        return cls(
            spec["kind"],
            radius_cap=float(spec.get("radius_cap", 0.0)),
            growth=tuple(growth_from_dict(g) for g in spec.get("growth", ())),
            shapes=tuple(shape_from_dict(s) for s in spec.get("shapes", ())),
        )


def _as_set(sigma) -> MarkedPointSet:
    return sigma if isinstance(sigma, MarkedPointSet) else MarkedPointSet.from_points(sigma)


def eval_cech_radii(sigma, radius_cap: float | None = None) -> float:
    """Smallest ``t >= 0`` at which the balls ``B(x, t + r)`` share a point."""
    s = _as_set(sigma)
    cap = float(s.marks.max()) if radius_cap is None and len(s) else (radius_cap or 0.0)
    return FiltrationFunction("cech_radii", radius_cap=cap)(s)


def eval_rips_radii(sigma, radius_cap: float | None = None) -> float:
    s = _as_set(sigma)
    cap = float(s.marks.max()) if radius_cap is None and len(s) else (radius_cap or 0.0)
    return FiltrationFunction("rips_radii", radius_cap=cap)(s)


def eval_cech_growth(sigma, growth: Sequence[GrowthFunction]) -> float:
    return FiltrationFunction("cech_growth", growth=tuple(growth))(_as_set(sigma))


def eval_rips_growth(sigma, growth: Sequence[GrowthFunction]) -> float:
    return FiltrationFunction("rips_growth", growth=tuple(growth))(_as_set(sigma))


def eval_cech_shape(sigma, shapes: Sequence[ConvexShape]) -> float:
    return FiltrationFunction("cech_shape", shapes=tuple(shapes))(_as_set(sigma))


def rho(kappa: FiltrationFunction, t: float) -> float:
    return kappa.rho(t)
