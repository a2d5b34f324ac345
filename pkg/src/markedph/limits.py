"""Averaging nets, lattice decompositions of windows and the LLN experiment.

The experiment samples the marked process on each window of a finite
averaging net for a list of seeds, builds the κ-filtered complex, and
records persistent Betti numbers and rectangle counts normalised by the
window volume. Aggregates over seeds give the per-window mean, its
standard error and the change from the previous window.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .complex import build_filtered_complex
from .errors import BudgetExceeded
from .kappa import FiltrationFunction, MarkedPointSet
from .persistence import (
    PersistenceDiagram,
    Rectangle,
    diagram_rectangle_count,
    persistent_betti,
    read_diagram_csv,
    reduce,
)
from .processes import ProcessSpec, derive_seed, restrict, sample_marked_process
from .windows import Ball, Box, Cube, Window, unit_ball_volume

log = logging.getLogger(__name__)

# --------------------------------------------------------------------------
# averaging nets
# --------------------------------------------------------------------------


def _window_inside(a: Window, b: Window, tol: float = 1e-12) -> bool:
    """Whether ``a`` is contained in ``b`` (closed-form per shape pair)."""
    if isinstance(b, Box):
        lo_a, hi_a = a.bounding_box()
        return bool(np.all(lo_a >= np.asarray(b.lo) - tol) and np.all(hi_a <= np.asarray(b.hi) + tol))
    if isinstance(b, Ball):
        cb = np.asarray(b.center)
        if isinstance(a, Ball):
            return float(np.linalg.norm(np.asarray(a.center) - cb)) + a.radius <= b.radius + tol
        lo, hi = a.bounding_box()
        far = np.maximum(np.abs(lo - cb), np.abs(hi - cb))
        return float(np.linalg.norm(far)) <= b.radius + tol
    raise TypeError(f"unsupported window {b!r}")


@dataclass(frozen=True)
class AveragingNet:
    """A finite increasing sequence of convex windows."""

    windows: tuple[Window, ...]

    def __post_init__(self):
        ws = tuple(self.windows)
        if not ws:
            raise ValueError("an averaging net needs at least one window")
        if len({w.dim for w in ws}) != 1:
            raise ValueError("all windows must share one dimension")
        for a, b in zip(ws, ws[1:]):
            if not _window_inside(a, b):
                raise ValueError(f"windows are not nested: {a.label} not inside {b.label}")
            if not b.inradius() > a.inradius():
                raise ValueError("inradius must increase strictly along the net")
        object.__setattr__(self, "windows", ws)

    @classmethod
    def cubes(cls, sides: Sequence[float], dim: int) -> "AveragingNet":
        return cls(tuple(Cube(float(L), dim) for L in sides))

    @classmethod
    def balls(cls, radii: Sequence[float], dim: int) -> "AveragingNet":
        return cls(tuple(Ball(float(r), dim) for r in radii))

    @property
    def dim(self) -> int:
        return self.windows[0].dim

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)


# --------------------------------------------------------------------------
# lattice decomposition
# --------------------------------------------------------------------------


def _box_cell_ranges(box: Box, M: float) -> tuple[list[range], list[range]]:
    """Per-axis integer ranges ``k`` of cells ``[kM - M/2, kM + M/2)`` inside / meeting a box.

    Exact: the float bounds are converted to rationals before comparison.
    """
    m = Fraction(M)
    half = Fraction(1, 2)
    inner, outer = [], []
    for lo, hi in zip(box.lo, box.hi):
        flo, fhi = Fraction(lo), Fraction(hi)
        # cell inside: kM - M/2 >= lo and kM + M/2 <= hi
        inner.append(range(math.ceil(flo / m + half), math.floor(fhi / m - half) + 1))
        # cell meets: kM - M/2 < hi and kM + M/2 > lo
        outer.append(range(math.floor(flo / m - half) + 1, math.ceil(fhi / m + half)))
    return inner, outer


def _ball_cells(ball: Ball, M: float) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(ball.center)
    rad2 = ball.radius**2
    axes = [
        np.arange(math.floor((ci - ball.radius) / M - 0.5), math.ceil((ci + ball.radius) / M + 0.5) + 1)
        for ci in c
    ]
    ks = np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(-1, ball.dim)
    z = ks * M
    lo, hi = z - M / 2, z + M / 2
    far = np.maximum(np.abs(lo - c), np.abs(hi - c))
    inside = np.einsum("ij,ij->i", far, far) <= rad2
    near = np.clip(c, lo, hi)
    d2 = np.einsum("ij,ij->i", near - c, near - c)
    # a half-open cell never attains its upper faces
    attained = np.all(near < hi, axis=1)
    meets = (d2 < rad2) | ((d2 == rad2) & attained)
    return ks[inside], ks[meets]


@dataclass
class WindowDecomposition:
    """Inner and outer lattice cells of a window at scale ``M``.

    Cells are ``Λ_M + z`` with ``Λ_M = [-M/2, M/2)^d`` and ``z`` in the
    lattice ``M Z^d``; they are stored by their integer index ``z / M``.
    """

    window: Window
    M: float
    h: float
    inner_count: int
    outer_count: int
    _inner_ranges: list[range] | None = field(default=None, repr=False)
    _outer_ranges: list[range] | None = field(default=None, repr=False)
    _inner: np.ndarray | None = field(default=None, repr=False)
    _outer: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def _expand(ranges) -> np.ndarray:
        if any(len(r) == 0 for r in ranges):
            return np.zeros((0, len(ranges)), dtype=np.int64)
        grids = np.meshgrid(*[np.arange(r.start, r.stop) for r in ranges], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    @property
    def inner_cells(self) -> np.ndarray:
        """Lattice translates ``z`` (in units of ``M``) of the cells inside the window."""
        if self._inner is None:
            self._inner = self._expand(self._inner_ranges)
        return self._inner

    @property
    def outer_cells(self) -> np.ndarray:
        if self._outer is None:
            self._outer = self._expand(self._outer_ranges)
        return self._outer

    @property
    def cell_volume(self) -> float:
        return self.M**self.window.dim

    @property
    def inner_volume(self) -> float:
        return self.inner_count * self.cell_volume

    @property
    def outer_volume(self) -> float:
        return self.outer_count * self.cell_volume

    def inner_ratio(self) -> float:
        """``ℓ(⌊A⌋) / ℓ(A)``, exact for boxes."""
        if isinstance(self.window, Box):
            vol = math.prod(Fraction(b) - Fraction(a) for a, b in zip(self.window.lo, self.window.hi))
            return float(self.inner_count * Fraction(self.M) ** self.window.dim / vol)
        return self.inner_volume / self.window.volume()

    def annulus_ratio(self) -> float:
        """``ℓ(⌈A⌉ \\ ⌊A⌋) / ℓ(A)``."""
        if isinstance(self.window, Box):
            vol = math.prod(Fraction(b) - Fraction(a) for a, b in zip(self.window.lo, self.window.hi))
            diff = (self.outer_count - self.inner_count) * Fraction(self.M) ** self.window.dim
            return float(diff / vol)
        return (self.outer_volume - self.inner_volume) / self.window.volume()

    def shell_ratio(self) -> float:
        return boundary_shell_volume(self.window, self.h) / self.window.volume()


def decompose_window(window: Window, M: float, h: float = 0.0) -> WindowDecomposition:
    if not (M > 0 and math.isfinite(M)):
        raise ValueError("cell scale M must be a positive real")
    if h < 0:
        raise ValueError("shell width h must be nonnegative")
    if isinstance(window, Box):
        inner, outer = _box_cell_ranges(window, M)
        return WindowDecomposition(
            window, M, h,
            math.prod(len(r) for r in inner), math.prod(len(r) for r in outer),
            _inner_ranges=inner, _outer_ranges=outer,
        )
    if isinstance(window, Ball):
        inner, outer = _ball_cells(window, M)
        return WindowDecomposition(window, M, h, len(inner), len(outer), _inner=inner, _outer=outer)
    raise TypeError(f"unsupported window {window!r}")


def _elementary_symmetric(values: Sequence[float]) -> list[float]:
    e = [1.0] + [0.0] * len(values)
    for v in values:
        for k in range(len(values), 0, -1):
            e[k] += v * e[k - 1]
    return e


def boundary_shell_volume(window: Window, h: float) -> float:
    """Volume of ``{x : dist(x, ∂A) <= h}``.

    The inside part is the window minus its inner parallel body; the
    outside part follows from the Steiner formula for the outer parallel
    body (Euclidean distance).
    """
    if h < 0:
        raise ValueError("shell width h must be nonnegative")
    if h == 0:
        return 0.0
    d = window.dim
    if isinstance(window, Box):
        sides = [b - a for a, b in zip(window.lo, window.hi)]
        vol = math.prod(sides)
        inner = math.prod(max(s - 2 * h, 0.0) for s in sides)
        e = _elementary_symmetric(sides)
        outer = sum(unit_ball_volume(j) * h**j * e[d - j] for j in range(1, d + 1))
        return (vol - inner) + outer
    if isinstance(window, Ball):
        rho0 = window.radius
        return unit_ball_volume(d) * ((rho0 + h) ** d - max(rho0 - h, 0.0) ** d)
    raise TypeError(f"unsupported window {window!r}")


@dataclass
class GeometryTable:
    rows: list[dict]
    monotone: dict[str, bool]

    COLUMNS = ("label", "volume", "inner_ratio", "annulus_ratio", "shell_ratio")

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r["label"]] + [repr(float(r[c])) for c in self.COLUMNS[1:]])


def verify_window_asymptotics(net: AveragingNet, M: float, h: float) -> GeometryTable:
    """Inner, annulus and shell ratios per window, with monotonicity flags.

    Along the net the inner ratio should rise toward 1 and the other two
    fall toward 0; ``monotone`` records whether the computed sequence does so.
    """
    rows = []
    for w in net:
        dec = decompose_window(w, M, h)
        rows.append({
            "label": w.label,
            "volume": w.volume(),
            "inner_ratio": dec.inner_ratio(),
            "annulus_ratio": dec.annulus_ratio(),
            "shell_ratio": dec.shell_ratio(),
        })
    col = lambda k: [r[k] for r in rows]  # noqa: E731
    monotone = {
        "inner_ratio": all(a <= b for a, b in zip(col("inner_ratio"), col("inner_ratio")[1:])),
        "annulus_ratio": all(a >= b for a, b in zip(col("annulus_ratio"), col("annulus_ratio")[1:])),
        "shell_ratio": all(a >= b for a, b in zip(col("shell_ratio"), col("shell_ratio")[1:])),
    }
    return GeometryTable(rows, monotone)


# --------------------------------------------------------------------------
# LLN experiment
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuerySet:
    """Persistent Betti queries ``(r, s)`` and rectangles, shared by every ``q``."""

    betti: tuple[tuple[float, float], ...] = ()
    rectangles: tuple[Rectangle, ...] = ()

    def check(self, t_max: float) -> None:
        for r, s in self.betti:
            if not (0 <= r <= s < t_max):
                raise ValueError(f"query (r={r}, s={s}) must satisfy 0 <= r <= s < t_max={t_max}")
        for rect in self.rectangles:
            if rect.s2 > t_max:
                raise ValueError(f"rectangle {rect} reaches beyond t_max={t_max}")


ROW_COLUMNS = ("window_label", "volume", "seed", "q", "kind", "r1", "r2", "s1", "s2", "value", "normalized")
AGG_COLUMNS = ("window_label", "volume", "q", "kind", "r1", "r2", "s1", "s2", "n", "mean", "stderr", "delta_prev")


@dataclass(frozen=True)
class ReportRow:
    window_label: str
    volume: float
    seed: int
    q: int
    kind: str
    r1: float
    r2: float
    s1: float
    s2: float
    value: int
    normalized: float

    @property
    def query(self) -> tuple:
        return (self.q, self.kind, self.r1, self.r2, self.s1, self.s2)


@dataclass(frozen=True)
class AggregateRow:
    window_label: str
    volume: float
    q: int
    kind: str
    r1: float
    r2: float
    s1: float
    s2: float
    n: int
    mean: float
    stderr: float | None
    delta_prev: float | None

    @property
    def query(self) -> tuple:
        return (self.q, self.kind, self.r1, self.r2, self.s1, self.s2)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    return str(x)


@dataclass
class ConvergenceReport:
    rows: list[ReportRow]
    aggregates: list[AggregateRow]
    skipped: list[dict] = field(default_factory=list)
    total_tasks: int = 0

    def aggregate(self, window_label: str, q: int, kind: str, r1, r2, s1, s2) -> AggregateRow:
        key = (q, kind, float(r1), float(r2), float(s1), float(s2))
        for a in self.aggregates:
            if a.window_label == window_label and a.query == key:
                return a
        raise KeyError((window_label,) + key)

    def series(self, q: int, kind: str, r1, r2, s1, s2) -> list[AggregateRow]:
        key = (q, kind, float(r1), float(r2), float(s1), float(s2))
        return [a for a in self.aggregates if a.query == key]

    @property
    def skip_fraction(self) -> float:
        return len(self.skipped) / self.total_tasks if self.total_tasks else 0.0

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in self.rows:
            w.writerow([_cell(getattr(r, c)) for c in ROW_COLUMNS])
        return buf.getvalue()

    def aggregates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGG_COLUMNS)
        for a in self.aggregates:
            w.writerow([_cell(getattr(a, c)) for c in AGG_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(d):
            return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}

        payload = {
            "rows": [clean(asdict(r)) for r in self.rows],
            "aggregates": [clean(asdict(a)) for a in self.aggregates],
            "skipped": self.skipped,
            "total_tasks": self.total_tasks,
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _diagram_rows(dgm: PersistenceDiagram, window: Window, seed: int, qs, queries: QuerySet) -> list[ReportRow]:
    vol = window.volume()
    rows = []
    for q in qs:
        for r, s in queries.betti:
            v = persistent_betti(dgm, q, r, s)
            rows.append(ReportRow(window.label, vol, seed, q, "beta", 0.0, float(r), float(s), math.inf, v, v / vol))
        for rect in queries.rectangles:
            v = diagram_rectangle_count(dgm, q, rect)
            kind = "xi_anchored" if rect.anchored else "xi_half_open"
            rows.append(ReportRow(
                window.label, vol, seed, q, kind, rect.r1, rect.r2, rect.s1, rect.s2, v, v / vol
            ))
    return rows


@dataclass(frozen=True)
class _Task:
    spec: ProcessSpec
    window: Window
    window_index: int
    seed_index: int
    kappa: FiltrationFunction
    q_max: int
    t_max: float
    budget: int | None
    cache_path: str | None


def task_cache_key(context: dict, window: Window, seed_index: int, seed: int) -> str:
    """Content address of one (window, seed) diagram."""
    blob = json.dumps(
        {"context": context, "window": window.to_dict(), "seed_index": seed_index, "seed": seed},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def _run_task(task: _Task) -> tuple[PersistenceDiagram | None, str | None, int]:
    """Sample, build, reduce. Returns ``(diagram, skip_reason, n_points)``."""
    seed = derive_seed(task.spec.seed, task.window_index, task.seed_index)
    if task.cache_path and os.path.exists(task.cache_path):
        with open(task.cache_path) as fh:
            first = fh.readline()
            if first.startswith("skip,"):
                return None, first.strip().split(",", 1)[1], -1
            fh.seek(0)
            return read_diagram_csv(fh, task.q_max, task.t_max), None, -1
    rec = sample_marked_process(task.spec, task.window, seed=seed)
    try:
        cx = build_filtered_complex(rec.points, task.kappa, task.q_max, task.t_max, max_simplices=task.budget)
    except BudgetExceeded as exc:
        dgm, reason = None, str(exc)
    else:
        dgm, reason = reduce(cx), None
    if task.cache_path:
        tmp = task.cache_path + ".tmp"
        with open(tmp, "w") as fh:
            if dgm is None:
                fh.write(f"skip,{reason}\n")
            else:
                dgm.to_csv(fh)
        os.replace(tmp, task.cache_path)
    return dgm, reason, len(rec.points)


def _aggregate(rows: list[ReportRow], windows: Sequence[Window]) -> list[AggregateRow]:
    by: dict[tuple, list[float]] = {}
    for r in rows:
        by.setdefault((r.window_label, r.query), []).append(r.normalized)
    queries = list(dict.fromkeys(r.query for r in rows))
    out = []
    for query in queries:
        prev = None
        for w in windows:
            vals = by.get((w.label, query))
            if not vals:
                continue
            arr = np.asarray(vals)
            mean = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else None
            delta = None if prev is None else mean - prev
            out.append(AggregateRow(w.label, w.volume(), *query, len(arr), mean, se, delta))
            prev = mean
    return out


def run_lln_experiment(
    spec: ProcessSpec,
    net: AveragingNet,
    kappa: FiltrationFunction,
    q,
    queries: QuerySet,
    seeds: Sequence[int] | int,
    q_max: int | None = None,
    t_max: float = 1.0,
    budget: int | None = None,
    jobs: int = 1,
    cache_dir: str | None = None,
    progress: Callable[[str], None] | None = None,
) -> ConvergenceReport:
    """Normalised persistent Betti numbers and rectangle counts across a net.

    ``seeds`` is either a count or a list of seed indices; the random
    stream of task ``(window i, seed j)`` is derived from ``spec.seed``.
    Tasks whose complex exceeds ``budget`` simplices are skipped and
    recorded. Results do not depend on ``jobs``.
    """
    qs = [int(q)] if np.isscalar(q) else [int(x) for x in q]
    if q_max is None:
        q_max = max(qs) + 1
    if any(x < 0 or x >= q_max for x in qs):
        raise ValueError(f"homology degrees {qs} outside 0..{q_max - 1}")
    queries.check(t_max)
    seed_ids = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    if not seed_ids:
        raise ValueError("at least one seed is required")
    context = {
        "spec": spec.to_dict(), "kappa": kappa.to_dict(), "q_max": q_max, "t_max": t_max, "budget": budget,
    }
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)

    tasks = []
    for wi, w in enumerate(net):
        for si in seed_ids:
            path = None
            if cache_dir:
                key = task_cache_key(context, w, si, derive_seed(spec.seed, wi, si))
                path = os.path.join(cache_dir, key + ".csv")
            tasks.append(_Task(spec, w, wi, si, kappa, q_max, t_max, budget, path))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_run_task(t))
            if progress:
                progress(f"{t.window.label} seed {t.seed_index}: done")

    rows: list[ReportRow] = []
    skipped: list[dict] = []
    for task, (dgm, reason, _) in zip(tasks, results):
        if dgm is None:
            skipped.append({"window_label": task.window.label, "seed": task.seed_index, "reason": reason})
            log.warning("skipped %s seed %d: %s", task.window.label, task.seed_index, reason)
            continue
        rows.extend(_diagram_rows(dgm, task.window, task.seed_index, qs, queries))
    return ConvergenceReport(rows, _aggregate(rows, net.windows), skipped, len(tasks))


def lattice_average_betti(
    phi: MarkedPointSet,
    window: Window,
    M: float,
    kappa: FiltrationFunction,
    q: int,
    r: float,
    s: float,
    q_max: int,
    t_max: float,
) -> float:
    """Average of ``β_q^{r,s}`` over the inner lattice cells of ``window``, per unit volume.

    A single-sample alternative to independent seeds; the lattice is the
    axis-aligned one.
    """
    dec = decompose_window(window, M)
    if dec.inner_count == 0:
        raise ValueError("window contains no lattice cell at this scale")
    total = 0
    for k in dec.inner_cells:
        cell = Box(tuple((k * M - M / 2).tolist()), tuple((k * M + M / 2).tolist()))
        sub = restrict(phi, cell)
        if len(sub) == 0:
            continue
        dgm = reduce(build_filtered_complex(sub, kappa, q_max, t_max))
        total += persistent_betti(dgm, q, r, s)
    return total / (dec.inner_count * dec.cell_volume)
