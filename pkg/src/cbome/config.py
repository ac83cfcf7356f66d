"""Experiment configuration files (JSON)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

from .benchmarks import BENCHMARKS
from .nnapprox import DEFAULT_TRAIN_CONFIG, TARGETS
from .segmentation import DEFAULT_SEGMENT_CONFIG
from .solver import METHODS, SolverConfig

__all__ = ["KINDS", "ConfigError", "ExperimentConfig", "load_config"]

KINDS = ("benchmark", "segment", "approx", "validate-selection", "compare")

# keys each kind accepts besides "kind", "solver" and "seed"
_KIND_KEYS = {
    "benchmark": {"objectives", "dim", "n_runs", "methods", "N", "mu"},
    "compare": {"objectives", "dim", "n_runs", "methods", "N", "mu"},
    "segment": {"image", "thresholds"},
    "approx": {"target", "layers", "width", "grid"},
    "validate-selection": {"n", "dims", "trials", "n_sel"},
}


# solver settings a kind starts from before the config's own keys apply
SOLVER_DEFAULTS = {"segment": DEFAULT_SEGMENT_CONFIG, "approx": DEFAULT_TRAIN_CONFIG}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment: a kind, solver settings and kind-specific fields.

    Lists (``objectives``, ``methods``, ``N``, ``mu``) span a grid of cells in
    the order objective, method, N, mu.
    """

    kind: str
    solver: SolverConfig = field(default_factory=SolverConfig)
    objectives: list = field(default_factory=lambda: ["ackley"])
    dim: int = 20
    n_runs: int = 25
    methods: Optional[list] = None
    N: Optional[list] = None
    mu: Optional[list] = None
    image: Optional[str] = None
    thresholds: int = 5
    target: str = "u1"
    layers: int = 3
    width: int = 50
    grid: int = 256
    n: int = 100
    dims: list = field(default_factory=lambda: [3, 10])
    trials: int = 500
    n_sel: Optional[list] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if self.methods is None:
            self.methods = list(METHODS) if self.kind == "compare" else ["cbo_me"]
        if self.N is None:
            self.N = [self.solver.n0]
        if self.mu is None:
            self.mu = [self.solver.mu]
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.kind in ("benchmark", "compare"):
            for o in self.objectives:
                if o not in BENCHMARKS:
                    raise ConfigError(f"unknown objective {o!r}; choose from {sorted(BENCHMARKS)}")
            if self.dim < 1 or self.n_runs < 1:
                raise ConfigError("dim and n_runs must be >= 1")
            if any(int(n) < 1 for n in self.N):
                raise ConfigError("N entries must be >= 1")
            if any(not 0 <= float(m) <= 1 for m in self.mu):
                raise ConfigError("mu entries must lie in [0, 1]")
        if self.kind == "segment":
            if not self.image:
                raise ConfigError("segment needs an 'image' path")
            if not 1 <= self.thresholds <= 254:
                raise ConfigError("thresholds must lie in [1, 254]")
        if self.kind == "approx":
            if self.target not in TARGETS:
                raise ConfigError(f"unknown target {self.target!r}; choose from {sorted(TARGETS)}")
            if self.grid < 2:
                raise ConfigError("grid must be >= 2")
        if self.kind == "validate-selection":
            if self.n < 2 or self.trials < 1:
                raise ConfigError("validate-selection needs n >= 2 and trials >= 1")
            if self.n_sel is None:
                self.n_sel = [1, self.n - 1] if self.n == 2 else [2, self.n - 1]
            if len(self.n_sel) != 2 or not 1 <= self.n_sel[0] <= self.n_sel[1] < self.n:
                raise ConfigError(f"n_sel must be [lo, hi] with 1 <= lo <= hi < {self.n}")

    @property
    def seed(self) -> int:
        return self.solver.seed

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, solver=self.solver.replace(seed=seed))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "solver": self.solver.to_dict()}
        for k in sorted(_KIND_KEYS[self.kind]):
            d[k] = getattr(self, k)
        return d

    @classmethod
    def from_dict(cls, doc: dict, kind: Optional[str] = None) -> "ExperimentConfig":
        """Validate a parsed JSON document; unknown keys are rejected."""
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc = dict(doc)
        k = doc.pop("kind", kind)
        if kind is not None and k not in (kind, "compare-baselines" if kind == "compare" else kind):
            raise ConfigError(f"config kind {k!r} does not match subcommand {kind!r}")
        k = "compare" if k == "compare-baselines" else k
        if k not in KINDS:
            raise ConfigError(f"unknown kind {k!r}; choose from {KINDS}")
        unknown = set(doc) - _KIND_KEYS[k] - {"solver", "seed"}
        if unknown:
            raise ConfigError(f"unknown keys for {k}: {sorted(unknown)}")
        solver = dict(doc.pop("solver", {}) or {})
        if "seed" in doc:
            solver["seed"] = doc.pop("seed")
        try:
            unknown = set(solver) - {f.name for f in dataclasses.fields(SolverConfig)}
            if unknown:
                raise ValueError(f"unknown solver keys: {sorted(unknown)}")
            scfg = SOLVER_DEFAULTS.get(k, SolverConfig()).replace(**solver)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from None
        try:
            return cls(kind=k, solver=scfg, **doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path, kind: Optional[str] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return ExperimentConfig.from_dict(doc, kind)
