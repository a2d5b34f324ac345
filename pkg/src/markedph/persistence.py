"""Persistence diagrams, persistent Betti numbers and rectangle counts.

Homology is taken with coefficients in the two-element field. Deaths that
would occur after the horizon ``t_max`` are reported as ``inf`` with the
``censored`` flag set; every simplex born by ``t_max`` is present, so
``β^{r,s}`` is exact for ``s <= t_max``.

A complex truncated at dimension ``q_max`` determines homology only in
degrees below ``q_max``; diagrams therefore hold degrees ``0..q_max-1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from ._backend import kernels
from .complex import FilteredComplex

ORACLE_MAX_SIMPLICES = 5000
CSV_HEADER = ("dim", "birth", "death", "censored")


@dataclass(frozen=True, order=True)
class PersistencePair:
    dim: int
    birth: float
    death: float
    censored: bool = False

    def __post_init__(self):
        if not (0 <= self.birth < self.death):
            raise ValueError(f"invalid birth-death pair ({self.birth}, {self.death})")


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of birth-death pairs, one entry per unit of multiplicity."""

    pairs: tuple[PersistencePair, ...]
    q_max: int
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def in_dim(self, q: int) -> tuple[np.ndarray, np.ndarray]:
        """Births and deaths of the ``q``-dimensional pairs."""
        sel = [p for p in self.pairs if p.dim == q]
        return (
            np.array([p.birth for p in sel], dtype=np.float64),
            np.array([p.death for p in sel], dtype=np.float64),
        )

    def multiplicities(self, q: int) -> dict[tuple[float, float], int]:
        out: dict[tuple[float, float], int] = {}
        for p in self.pairs:
            if p.dim == q:
                out[(p.birth, p.death)] = out.get((p.birth, p.death), 0) + 1
        return out

    def to_csv(self, fh: TextIO) -> None:
        write_diagram_csv(self, fh)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        write_diagram_csv(self, buf)
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def write_diagram_csv(dgm: PersistenceDiagram, fh: TextIO) -> None:
    fh.write(",".join(CSV_HEADER) + "\n")
    for p in dgm.pairs:
        fh.write(f"{p.dim},{_fmt(p.birth)},{_fmt(p.death)},{int(p.censored)}\n")


def read_diagram_csv(fh: TextIO, q_max: int | None = None, t_max: float = math.inf) -> PersistenceDiagram:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise ValueError(f"diagram CSV must start with header {','.join(CSV_HEADER)}")
    pairs = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            dim, birth, death, cens = row
            pairs.append(PersistencePair(int(dim), float(birth), float(death), bool(int(cens))))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed diagram row {row!r} ({exc})") from None
    if q_max is None:
        q_max = max([0] + [p.dim for p in pairs]) + 1
    return PersistenceDiagram(tuple(pairs), q_max, t_max)


# --------------------------------------------------------------------------
# reduction
# --------------------------------------------------------------------------


def reduce(cx: FilteredComplex) -> PersistenceDiagram:
    """Persistence pairs by left-to-right reduction of the boundary matrix.

    A reduced column with lowest one in row ``i`` pairs simplex ``i``
    (birth) with the column's simplex (death). Positive simplices left
    unpaired give ``death = inf``; pairs with ``birth == death`` are dropped,
    as are degree-``q_max`` classes (their deaths need absent cofaces).
    """
    _check_order(cx)
    n = len(cx)
    indptr, indices = cx.boundary_csr()
    low = np.asarray(kernels.reduce_boundary(indptr, indices, n), dtype=np.int64)
    births, dims = cx.births, cx.dims
    paired = np.zeros(n, dtype=bool)
    pairs: list[PersistencePair] = []
    for j in np.flatnonzero(low >= 0).tolist():
        i = int(low[j])
        paired[i] = True
        paired[j] = True
        if births[i] < births[j] and dims[i] < cx.q_max:
            pairs.append(PersistencePair(int(dims[i]), float(births[i]), float(births[j]), False))
    for i in np.flatnonzero(~paired & (dims < cx.q_max)).tolist():
        pairs.append(PersistencePair(int(dims[i]), float(births[i]), math.inf, True))
    return PersistenceDiagram(tuple(pairs), cx.q_max, cx.t_max)


def _check_order(cx: FilteredComplex) -> None:
    for j, s in enumerate(cx.simplices):
        if j and (cx.simplices[j - 1].birth, cx.simplices[j - 1].dim) > (s.birth, s.dim):
            raise RuntimeError("complex is not in filtration order")


# --------------------------------------------------------------------------
# persistent Betti numbers
# --------------------------------------------------------------------------


def _check_rs(t_max: float, r: float, s: float) -> None:
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r > s:
        raise ValueError(f"need r <= s, got r={r}, s={s}")
    if s > t_max:
        raise ValueError(f"s={s} beyond the horizon t_max={t_max}")


def persistent_betti(dgm: PersistenceDiagram, q: int, r: float, s: float) -> int:
    """``β_q^{r,s}``: number of pairs with ``birth <= r`` and ``death > s``."""
    if not 0 <= q < dgm.q_max:
        raise ValueError(f"degree q={q} is not determined by a complex truncated at q_max={dgm.q_max}")
    _check_rs(dgm.t_max, r, s)
    return sum(1 for p in dgm.pairs if p.dim == q and p.birth <= r and p.death > s)


def persistent_betti_oracle(cx: FilteredComplex, q: int, r: float, s: float) -> int:
    """``dim Z_q(K_r) / (Z_q(K_r) ∩ B_q(K_s))`` by dense GF(2) elimination.

    Computed as ``rank[Z_q(K_r) | B_q(K_s)] - rank B_q(K_s)``. Independent of
    :func:`reduce`; meant for checking on small complexes only. For
    ``q = q_max`` the boundaries come from whatever cofaces are present,
    i.e. none, so the value is the rank of the cycle space.
    """
    if not 0 <= q <= cx.q_max:
        raise ValueError(f"q={q} outside 0..{cx.q_max}")
    if len(cx) > ORACLE_MAX_SIMPLICES:
        raise ValueError(f"oracle refuses complexes above {ORACLE_MAX_SIMPLICES} simplices")
    _check_rs(cx.t_max, r, s)
    q_simplices = [sp.vertices for sp in cx if sp.dim == q and sp.birth <= s]
    q_index = {v: i for i, v in enumerate(q_simplices)}
    in_r = [sp.vertices for sp in cx if sp.dim == q and sp.birth <= r]

    if q == 0:
        cycles = [1 << q_index[v] for v in in_r]
    else:
        face_index: dict[tuple[int, ...], int] = {}
        columns = []
        for v in in_r:
            bits = 0
            for i in range(len(v)):
                f = v[:i] + v[i + 1:]
                bits ^= 1 << face_index.setdefault(f, len(face_index))
            columns.append(bits)
        cycles = _kernel_basis(columns, [1 << q_index[v] for v in in_r])

    boundaries = []
    for sp in cx:
        if sp.dim == q + 1 and sp.birth <= s:
            v = sp.vertices
            bits = 0
            for i in range(len(v)):
                bits ^= 1 << q_index[v[:i] + v[i + 1:]]
            boundaries.append(bits)
    return _gf2_rank(cycles + boundaries) - _gf2_rank(boundaries)


def nested_betti_bound(sub: FilteredComplex, sup: FilteredComplex, vertex_map, q: int, s: float) -> int:
    """Simplices of degree ``q`` and ``q + 1`` present at level ``s`` in ``sup`` but not in ``sub``.

    ``sub`` is built on a subset of the points of ``sup``; ``vertex_map[i]``
    is the index in ``sup`` of vertex ``i`` of ``sub``. Births must be
    inherited, which holds when both complexes come from the same κ. The
    count bounds ``|β_q^{r,s}(sub) - β_q^{r,s}(sup)|`` for every ``r <= s``.
    """
    vmap = [int(v) for v in vertex_map]
    inner = {tuple(sorted(vmap[v] for v in sp.vertices)) for sp in sub if sp.birth <= s}
    return sum(1 for sp in sup if sp.dim in (q, q + 1) and sp.birth <= s and sp.vertices not in inner)


def _gf2_rank(vectors: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def _kernel_basis(columns: list[int], labels: list[int]) -> list[int]:
    """Null space of the column map: combinations (as label bitsets) summing to zero."""
    basis: dict[int, tuple[int, int]] = {}
    kernel = []
    for col, lab in zip(columns, labels):
        while col:
            top = col.bit_length() - 1
            if top not in basis:
                basis[top] = (col, lab)
                break
            bcol, blab = basis[top]
            col ^= bcol
            lab ^= blab
        if not col:
            kernel.append(lab)
    return kernel


# --------------------------------------------------------------------------
# rectangle counts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Rectangle:
    """``(r1, r2] x (s1, s2]``, or ``[0, r2] x (s1, s2]`` when ``anchored``.

    Only rectangles inside the region ``birth < death`` are allowed:
    ``0 <= r1 <= r2 <= s1 <= s2``.
    """

    r1: float
    r2: float
    s1: float
    s2: float
    anchored: bool = False

    def __post_init__(self):
        if self.anchored and self.r1 != 0:
            raise ValueError("anchored rectangles start at 0")
        if not (0 <= self.r1 <= self.r2 <= self.s1 <= self.s2):
            raise ValueError(f"malformed rectangle {self}: need 0 <= r1 <= r2 <= s1 <= s2")

    @classmethod
    def from_origin(cls, r: float, s1: float, s2: float) -> "Rectangle":
        return cls(0.0, r, s1, s2, anchored=True)

    def contains(self, birth: float, death: float) -> bool:
        lo_ok = birth >= 0 if self.anchored else birth > self.r1
        return lo_ok and birth <= self.r2 and self.s1 < death <= self.s2

    def to_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "s1": self.s1, "s2": self.s2, "anchored": self.anchored}


def rectangle_alternating_sum(dgm: PersistenceDiagram, q: int, rect: Rectangle) -> int:
    """``ξ_q(rect)`` written through persistent Betti numbers."""
    b = lambda r, s: persistent_betti(dgm, q, r, s)  # noqa: E731
    total = b(rect.r2, rect.s1) - b(rect.r2, rect.s2)
    if not rect.anchored:
        total += b(rect.r1, rect.s2) - b(rect.r1, rect.s1)
    return total


def diagram_rectangle_count(dgm: PersistenceDiagram, q: int, rect: Rectangle) -> int:
    """Number of ``q``-pairs inside ``rect`` (the counting measure ``ξ_q(rect)``)."""
    if rect.s2 > dgm.t_max:
        raise ValueError(f"rectangle reaches beyond t_max={dgm.t_max}")
    count = sum(1 for p in dgm.pairs if p.dim == q and rect.contains(p.birth, p.death))
    assert count == rectangle_alternating_sum(dgm, q, rect), "rectangle count disagrees with Betti sum"
    return count
