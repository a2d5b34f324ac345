"""Experiment configuration files.

A configuration is a YAML mapping with these keys (all required unless a
default is given):

.. code-block:: yaml

    dimension: 2
    kappa:                      # FiltrationFunction.to_dict() layout
      kind: cech_radii
      radius_cap: 0.5
    process:
      intensity: 1.0
      seed: 12345               # root seed, unsigned 64-bit
      marking:                  # iid: mark_kind + dist fields; or matern_i
        type: iid
        mark_kind: radius
        dist: uniform
        low: 0.0
        high: 0.5
    net:
      shape: cube               # cube | ball
      sizes: [20, 40, 80]       # side lengths or radii, strictly increasing
    q: [0, 1]
    q_max: 2
    t_max: 0.65
    queries:
      betti: [[0.2, 0.5]]       # (r, s) pairs with r <= s < t_max
      rectangles:
        - {r1: 0.0, r2: 0.2, s1: 0.3, s2: 0.6, anchored: true}
    seeds: 20
    budget: 2000000             # max simplices per complex (default: none)
    output: lln_out             # default output directory (default: lln_out)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import yaml

from .errors import ConfigurationError
from .kappa import FiltrationFunction
from .limits import AveragingNet, QuerySet
from .persistence import Rectangle
from .processes import ProcessSpec

_KEYS = {
    "dimension", "kappa", "process", "net", "q", "q_max", "t_max", "queries", "seeds", "budget", "output",
}


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int
    kappa: FiltrationFunction
    process: ProcessSpec
    net_shape: str
    sizes: tuple[float, ...]
    q: tuple[int, ...]
    q_max: int
    t_max: float
    queries: QuerySet
    seeds: int
    budget: int | None = None
    output: str = "lln_out"

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError("dimension must be positive")
        if self.net_shape not in ("cube", "ball"):
            raise ConfigurationError(f"unknown net shape {self.net_shape!r}")
        if not self.sizes or any(b <= a for a, b in zip(self.sizes, self.sizes[1:])) or self.sizes[0] <= 0:
            raise ConfigurationError("net sizes must be positive and strictly increasing")
        if self.seeds < 1:
            raise ConfigurationError("seeds must be at least 1")
        if self.q_max < 1 or any(x < 0 or x >= self.q_max for x in self.q):
            raise ConfigurationError("homology degrees must lie in 0..q_max-1")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ConfigurationError("t_max must be a positive real")
        if self.budget is not None and self.budget < 1:
            raise ConfigurationError("budget must be positive")
        try:
            self.queries.check(self.t_max)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    def net(self) -> AveragingNet:
        if self.net_shape == "cube":
            return AveragingNet.cubes(self.sizes, self.dimension)
        return AveragingNet.balls(self.sizes, self.dimension)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = self.to_dict()
        d["process"]["seed"] = int(seed)
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "kappa": self.kappa.to_dict(),
            "process": self.process.to_dict(),
            "net": {"shape": self.net_shape, "sizes": list(self.sizes)},
            "q": list(self.q),
            "q_max": self.q_max,
            "t_max": self.t_max,
            "queries": {
                "betti": [[r, s] for r, s in self.queries.betti],
                "rectangles": [rect.to_dict() for rect in self.queries.rectangles],
            },
            "seeds": self.seeds,
            "budget": self.budget,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("configuration must be a mapping")
        unknown = set(d) - _KEYS
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            q = d["q"]
            qs = (int(q),) if isinstance(q, int) else tuple(int(x) for x in q)
            qd = d.get("queries", {}) or {}
            queries = QuerySet(
                tuple((float(r), float(s)) for r, s in qd.get("betti", []) or []),
                tuple(
                    Rectangle(
                        float(x.get("r1", 0.0)), float(x["r2"]), float(x["s1"]), float(x["s2"]),
                        bool(x.get("anchored", False)),
                    )
                    for x in qd.get("rectangles", []) or []
                ),
            )
            budget = d.get("budget")
            return cls(
                dimension=int(d["dimension"]),
                kappa=FiltrationFunction.from_dict(d["kappa"]),
                process=ProcessSpec.from_dict(d["process"]),
                net_shape=str(d["net"]["shape"]),
                sizes=tuple(float(x) for x in d["net"]["sizes"]),
                q=qs,
                q_max=int(d["q_max"]),
                t_max=float(d["t_max"]),
                queries=queries,
                seeds=int(d["seeds"]),
                budget=None if budget is None else int(budget),
                output=str(d.get("output", "lln_out")),
            )
        except KeyError as exc:
            raise ConfigurationError(f"missing configuration key {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"invalid configuration: {exc}") from None

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse configuration: {exc}") from None
    return ExperimentConfig.from_dict(data)


def load(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return loads(fh.read())


def default_config_text() -> str:
    return resources.files("markedph").joinpath("data/default_lln.yaml").read_text()


def default_config() -> ExperimentConfig:
    return loads(default_config_text())
