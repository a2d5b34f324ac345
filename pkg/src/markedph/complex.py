"""κ-filtered simplicial complexes over marked point sets."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetExceeded
from .kappa import FiltrationFunction, MarkedPointSet


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[int, ...]
    birth: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class FilteredComplex:
    """Simplices of ``K(Ξ, t_max)`` up to dimension ``q_max`` with birth times.

    Simplices are kept in filtration order: by birth, then dimension, then
    lexicographic vertex list, so every face precedes its cofaces.
    """

    def __init__(self, ground: MarkedPointSet, q_max: int, t_max: float, simplices):
        self.ground = ground
        self.q_max = q_max
        self.t_max = t_max
        self.simplices: list[Simplex] = sorted(simplices, key=lambda s: (s.birth, s.dim, s.vertices))
        self.births = np.array([s.birth for s in self.simplices], dtype=np.float64)
        self.dims = np.array([s.dim for s in self.simplices], dtype=np.int64)
        self.index = {s.vertices: i for i, s in enumerate(self.simplices)}

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self) -> Iterator[Simplex]:
        return iter(self.simplices)

    def __getitem__(self, i: int) -> Simplex:
        return self.simplices[i]

    def level(self, t: float) -> set[tuple[int, ...]]:
        """Vertex tuples of the simplices of ``K(Ξ, t)``."""
        return {s.vertices for s in self.simplices if s.birth <= t}

    def simplex_count(self, q: int, t: float) -> int:
        return simplex_count(self, q, t)

    def boundary_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary matrix in compressed-column form, rows sorted per column."""
        indptr = np.zeros(len(self) + 1, dtype=np.int64)
        rows: list[int] = []
        for j, s in enumerate(self.simplices):
            v = s.vertices
            if len(v) > 1:
                rows.extend(sorted(self.index[v[:i] + v[i + 1:]] for i in range(len(v))))
            indptr[j + 1] = len(rows)
        return indptr, np.asarray(rows, dtype=np.int64)

    def validate(self) -> None:
        """Raise ``ValueError`` unless faces are present, precede cofaces and are born no later."""
        for j, s in enumerate(self.simplices):
            v = s.vertices
            if any(a >= b for a, b in zip(v, v[1:])):
                raise ValueError(f"vertices of {v} are not strictly increasing")
            if len(v) == 1:
                continue
            for i in range(len(v)):
                face = v[:i] + v[i + 1:]
                k = self.index.get(face)
                if k is None:
                    raise ValueError(f"face {face} of {v} is missing")
                if k >= j or self.simplices[k].birth > s.birth:
                    raise ValueError(f"face {face} does not precede {v}")

    def dump(self, fh: TextIO) -> None:
        """Write ``dim,birth,v0 v1 ...`` lines in filtration order."""
        for s in self.simplices:
            fh.write(f"{s.dim},{_fmt(s.birth)},{' '.join(map(str, s.vertices))}\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def _check_args(q_max, t_max):
    if int(q_max) != q_max or q_max < 0:
        raise ValueError("q_max must be a nonnegative integer")
    if not (t_max > 0) or math.isinf(t_max) or math.isnan(t_max):
        raise ValueError("t_max must be a positive finite real")


def build_filtered_complex(
    xi: MarkedPointSet,
    kappa: FiltrationFunction,
    q_max: int,
    t_max: float,
    max_simplices: int | None = None,
) -> FilteredComplex:
    """Enumerate every simplex of dimension ``<= q_max`` with ``κ <= t_max``.

    Candidate edges come from a k-d tree query with radius ``rho(t_max)``;
    higher simplices are grown from common neighbours of a simplex whose
    index exceeds its last vertex, and κ is evaluated only for candidates
    whose facets are all present. Births are clamped up to the largest
    facet birth so that round-off never breaks monotonicity.
    """
    _check_args(q_max, t_max)
    q_max = int(q_max)
    kappa.check_marks(xi.marks, xi.mark_kind, xi.dim)
    pos, marks = xi.positions, xi.marks
    n = len(xi)
    budget = math.inf if max_simplices is None else max_simplices

    vb = kappa.values(pos, marks, np.arange(n).reshape(-1, 1))
    keep = np.flatnonzero(vb <= t_max)
    simplices = [Simplex((int(i),), float(vb[i])) for i in keep]
    births: dict[tuple[int, ...], float] = {s.vertices: s.birth for s in simplices}
    if len(simplices) > budget:
        raise BudgetExceeded(f"{len(simplices)} simplices exceed budget {max_simplices}")
    if q_max == 0 or len(keep) < 2:
        return FilteredComplex(xi, q_max, t_max, simplices)

    reach = kappa.rho(t_max)
    tree = cKDTree(pos[keep])
    pairs = tree.query_pairs(reach * (1 + 1e-12) + 1e-12, output_type="ndarray")
    pairs = np.sort(keep[pairs], axis=1) if len(pairs) else np.zeros((0, 2), dtype=np.int64)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs
    kv = kappa.values(pos, marks, pairs)
    ok = kv <= t_max
    adj: dict[int, set[int]] = {int(i): set() for i in keep}
    current: list[tuple[int, ...]] = []
    for (a, b), k in zip(pairs[ok].tolist(), kv[ok].tolist()):
        birth = max(k, births[(a,)], births[(b,)])
        simplices.append(Simplex((a, b), birth))
        births[(a, b)] = birth
        adj[a].add(b)
        adj[b].add(a)
        current.append((a, b))
    if len(simplices) > budget:
        raise BudgetExceeded(f"{len(simplices)} simplices exceed budget {max_simplices}")

    for q in range(1, q_max):
        cand: list[tuple[int, ...]] = []
        face_birth: list[float] = []
        for sigma in current:
            common = set.intersection(*(adj[u] for u in sigma))
            for v in sorted(x for x in common if x > sigma[-1]):
                fb = births[sigma]
                for i in range(len(sigma)):
                    f = births.get(sigma[:i] + sigma[i + 1:] + (v,))
                    if f is None:
                        break
                    fb = max(fb, f)
                else:
                    cand.append(sigma + (v,))
                    face_birth.append(fb)
        if not cand:
            break
        kv = kappa.values(pos, marks, np.asarray(cand, dtype=np.int64))
        current = []
        for tau, k, fb in zip(cand, kv.tolist(), face_birth):
            if k <= t_max:
                birth = max(k, fb)
                simplices.append(Simplex(tau, birth))
                births[tau] = birth
                current.append(tau)
        if len(simplices) > budget:
            raise BudgetExceeded(f"{len(simplices)} simplices exceed budget {max_simplices}")
        if not current:
            break
    return FilteredComplex(xi, q_max, t_max, simplices)


def simplex_count(cx: FilteredComplex, q: int, t: float) -> int:
    """Number of ``q``-simplices born by time ``t``."""
    if q < 0 or q > cx.q_max:
        raise ValueError(f"q={q} outside 0..{cx.q_max}")
    if t < 0 or t > cx.t_max:
        raise ValueError(f"t={t} outside the horizon [0, {cx.t_max}]")
    return int(np.count_nonzero((cx.dims == q) & (cx.births <= t)))


def restrict_complex_counts(xi: MarkedPointSet, region, kappa: FiltrationFunction, q: int, t: float) -> int:
    """``S_q`` of the complex built over the points of ``xi`` lying in ``region``."""
    sub = xi.subset(np.flatnonzero(region.contains(xi.positions)))
    if len(sub) == 0:
        return 0
    cx = build_filtered_complex(sub, kappa, q, t if t > 0 else 1e-12)
    return int(np.count_nonzero((cx.dims == q) & (cx.births <= t)))
