"""Command-line interface.

``markedph diagram``  persistence diagram of a marked point file
``markedph lln``      law-of-large-numbers experiment from a config file
``markedph geometry`` lattice-decomposition ratios along a window net
``markedph sample``   dump one sample of the configured process
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import re
import sys

import numpy as np

from . import config as config_mod
from .complex import build_filtered_complex
from .errors import ConfigurationError, SimplicityError
from .kappa import _MARK_KIND_OF, KAPPA_KINDS, MARK_KINDS, EuclideanBall, FiltrationFunction, GrowthFunction
from .kappa import Box as BoxShape
from .kappa import L1Ball, MarkedPointSet
from .limits import AveragingNet, run_lln_experiment, verify_window_asymptotics
from .persistence import CSV_HEADER, reduce
from .processes import derive_seed, sample_marked_process, write_sample_csv

log = logging.getLogger("markedph")

_GROWTH_ARGS = {"linear": ("c",), "affine": ("b", "c"), "power": ("c", "p"), "saturating": ("b", "a", "tau")}


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------


def parse_growth(text: str) -> GrowthFunction:
    """``NAME:v1,v2,...`` with values in the order of the law's parameters."""
    name, _, rest = text.partition(":")
    if name not in _GROWTH_ARGS:
        raise argparse.ArgumentTypeError(f"unknown growth law {name!r}")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
        if len(vals) != len(_GROWTH_ARGS[name]):
            raise ValueError
        return GrowthFunction.create(name, **dict(zip(_GROWTH_ARGS[name], vals)))
    except (ValueError, ConfigurationError):
        raise argparse.ArgumentTypeError(
            f"growth {text!r}: expected {name}:{','.join(_GROWTH_ARGS[name])}"
        ) from None


def parse_shape(text: str):
    """``ball:R``, ``l1:R`` or ``box:a1,...,ad``."""
    kind, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")]
        if kind == "ball" and len(vals) == 1:
            return EuclideanBall(vals[0])
        if kind == "l1" and len(vals) == 1:
            return L1Ball(vals[0])
        if kind == "box":
            return BoxShape(tuple(vals))
    except (ValueError, ConfigurationError):
        pass
    raise argparse.ArgumentTypeError(f"shape {text!r}: expected ball:R, l1:R or box:a1,...,ad")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


# --------------------------------------------------------------------------
# points files
# --------------------------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def _mark_problem(mark_kind: str, m: float) -> str | None:
    if mark_kind == "radius":
        return None if m >= 0 else f"negative radius mark {m}"
    if mark_kind == "binary":
        return None if m in (0.0, 1.0) else f"binary mark must be 0 or 1, got {m}"
    return None if m >= 0 and m == int(m) else f"{mark_kind} mark must be a nonnegative integer id, got {m}"


def read_points(lines, mark_kind: str, dim: int | None = None) -> MarkedPointSet:
    """Parse ``x1 ... xd mark`` rows (comma or whitespace separated).

    Blank lines and ``#`` comments are ignored. A header of the sample-dump
    form ``x1,...,xd,mark_kind,mark_value`` is also accepted.
    """
    pos, marks = [], []
    width = None
    sample_format = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = [t for t in _SPLIT.split(line) if t]
        if not pos and width is None and tokens[0] == "x1":
            if tokens[-2:] != ["mark_kind", "mark_value"]:
                raise InputError(f"line {lineno}: unrecognised header {raw.strip()!r}")
            width = len(tokens) - 1
            sample_format = True
            continue
        if sample_format:
            if len(tokens) != width + 1 or tokens[-2] not in MARK_KINDS:
                raise InputError(f"line {lineno}: malformed row {raw.strip()!r}")
            if tokens[-2] != mark_kind:
                raise InputError(f"line {lineno}: mark kind {tokens[-2]} but the filtration needs {mark_kind}")
            tokens = tokens[:-2] + tokens[-1:]
        if width is None:
            width = len(tokens)
        if len(tokens) != width or len(tokens) < 2:
            raise InputError(f"line {lineno}: expected {width} columns (coordinates then mark), got {len(tokens)}")
        try:
            vals = [float(t) for t in tokens]
        except ValueError:
            raise InputError(f"line {lineno}: non-numeric value in {raw.strip()!r}") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"line {lineno}: non-finite value in {raw.strip()!r}")
        bad = _mark_problem(mark_kind, vals[-1])
        if bad:
            raise InputError(f"line {lineno}: {bad}")
        pos.append(vals[:-1])
        marks.append(vals[-1])
    if not pos:
        d = dim or (width - 1 if width else 1)
        return MarkedPointSet(np.zeros((0, d)), [], mark_kind, dim=d)
    d = len(pos[0])
    if dim is not None and dim != d:
        raise InputError(f"points have dimension {d}, expected {dim}")
    return MarkedPointSet(np.asarray(pos), marks, mark_kind, dim=d)


def _kappa_from_args(args, marks: np.ndarray) -> FiltrationFunction:
    cap = args.radius_cap
    if args.kappa.endswith("radii") and cap is None:
        cap = float(marks.max()) if len(marks) else 0.0
    return FiltrationFunction(
        args.kappa, radius_cap=cap or 0.0, growth=tuple(args.growth or ()), shapes=tuple(args.shape or ())
    )


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_diagram(args) -> int:
    try:
        if args.points == "-":
            xi = read_points(sys.stdin, _MARK_KIND_OF[args.kappa], args.dim)
        else:
            with open(args.points) as fh:
                xi = read_points(fh, _MARK_KIND_OF[args.kappa], args.dim)
        kappa = _kappa_from_args(args, xi.marks)
        if len(xi) == 0:
            text = ",".join(CSV_HEADER) + "\n"
        else:
            cx = build_filtered_complex(xi, kappa, args.q_max, args.t_max)
            text = reduce(cx).to_csv_string()
    except SimplicityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {args.points}: {exc}", file=sys.stderr)
        return 1
    _emit(text, args.output)
    return 0


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_config(args):
    cfg = config_mod.load(args.config) if args.config else config_mod.default_config()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_lln(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or cfg.output
    cache = os.path.join(out, "cache")
    os.makedirs(cache, exist_ok=True)
    if not args.resume:
        for f in glob.glob(os.path.join(cache, "*.csv")):
            os.remove(f)
    with open(os.path.join(out, "config.yaml"), "w") as fh:
        fh.write(cfg.dumps())
    log.info("running %d windows x %d seeds with %d job(s)", len(cfg.sizes), cfg.seeds, args.jobs)
    report = run_lln_experiment(
        cfg.process, cfg.net(), cfg.kappa, cfg.q, cfg.queries, cfg.seeds,
        q_max=cfg.q_max, t_max=cfg.t_max, budget=cfg.budget, jobs=args.jobs,
        cache_dir=cache, progress=log.info,
    )
    with open(os.path.join(out, "rows.csv"), "w") as fh:
        fh.write(report.rows_csv())
    with open(os.path.join(out, "aggregates.csv"), "w") as fh:
        fh.write(report.aggregates_csv())
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json())
    log.info("wrote %s (%d rows, %d skipped)", out, len(report.rows), len(report.skipped))
    if report.skip_fraction > 0.5:
        print(f"error: {len(report.skipped)} of {report.total_tasks} tasks skipped", file=sys.stderr)
        return 3
    return 0


def cmd_geometry(args) -> int:
    try:
        net = AveragingNet.cubes(args.sizes, args.dim) if args.shape == "cube" else AveragingNet.balls(args.sizes, args.dim)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table = verify_window_asymptotics(net, args.M, args.h)
    if args.output in (None, "-"):
        table.to_csv(sys.stdout)
    else:
        with open(args.output, "w") as fh:
            table.to_csv(fh)
    for col, ok in table.monotone.items():
        if not ok:
            log.warning("%s is not monotone along the net", col)
    return 0


def cmd_sample(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    windows = cfg.net().windows
    if not 0 <= args.window_index < len(windows):
        print(f"error: window index outside 0..{len(windows) - 1}", file=sys.stderr)
        return 2
    seed = derive_seed(cfg.process.seed, args.window_index, args.seed_index)
    rec = sample_marked_process(cfg.process, windows[args.window_index], seed=seed)
    if args.output in (None, "-"):
        write_sample_csv(rec.points, sys.stdout)
    else:
        with open(args.output, "w") as fh:
            write_sample_csv(rec.points, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markedph", description="Persistent homology of marked point processes.")
    p.add_argument("-v", "--verbose", action="store_true", help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diagram", help="persistence diagram of a marked point file")
    d.add_argument("points", help="rows 'x1 ... xd mark' (comma or whitespace separated); '-' for stdin")
    d.add_argument("--kappa", choices=KAPPA_KINDS, default="cech_radii")
    d.add_argument("--radius-cap", type=_nonneg_float, default=None, help="cap R on radius marks (default: max mark)")
    d.add_argument("--growth", type=parse_growth, action="append", help="growth law, e.g. linear:1 (repeatable)")
    d.add_argument("--shape", type=parse_shape, action="append", help="shape, e.g. ball:1 or box:1,2 (repeatable)")
    d.add_argument("--q-max", type=int, default=2, help="top simplex dimension (default 2)")
    d.add_argument("--t-max", type=_positive(float), default=1.0, help="filtration horizon (default 1)")
    d.add_argument("--dim", type=_positive(int), default=None, help="expected point dimension")
    d.add_argument("-o", "--output", default=None, help="output CSV (default stdout)")
    d.set_defaults(func=cmd_diagram)

    ll = sub.add_parser("lln", help="run a law-of-large-numbers experiment")
    ll.add_argument("--config", default=None, help="YAML config (default: bundled default_lln.yaml)")
    ll.add_argument("--out", default=None, help="output directory (default: from config)")
    ll.add_argument("--jobs", type=_positive(int), default=os.cpu_count() or 1)
    ll.add_argument("--seed", type=_u64, default=None, help="root seed, overrides the config")
    ll.add_argument("--resume", action="store_true", help="reuse cached per-task diagrams")
    ll.set_defaults(func=cmd_lln)

    g = sub.add_parser("geometry", help="lattice decomposition ratios along a window net")
    g.add_argument("--shape", choices=("cube", "ball"), default="cube")
    g.add_argument("--sizes", type=_positive(float), nargs="+", required=True)
    g.add_argument("--dim", type=_positive(int), default=2)
    g.add_argument("--M", type=_positive(float), required=True, help="lattice cell side")
    g.add_argument("--h", type=_nonneg_float, default=1.0, help="boundary shell width")
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_geometry)

    s = sub.add_parser("sample", help="write one sample of the configured process as CSV")
    s.add_argument("--config", default=None)
    s.add_argument("--seed", type=_u64, default=None)
    s.add_argument("--window-index", type=int, default=0)
    s.add_argument("--seed-index", type=int, default=0)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
