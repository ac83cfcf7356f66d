"""Particle ensembles, objectives and ensemble statistics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .rng import DrawKind, RngStream

__all__ = [
    "Objective",
    "ParticleEnsemble",
    "ensemble_mean",
    "ensemble_variance",
    "init_ensemble",
    "as_points",
]


def as_points(points) -> np.ndarray:
    """Coerce a list of vectors (or a 1-d list of scalars) to an ``(n, d)`` array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a list of vectors, got shape {arr.shape}")
    return arr


def ensemble_mean(points) -> np.ndarray:
    """Coordinate-wise mean of a point cloud."""
    z = as_points(points)
    if len(z) == 0:
        raise ValueError("empty ensemble")
    return z.mean(axis=0)


def ensemble_variance(points) -> float:
    """Mean squared Euclidean distance to the ensemble mean.

    ``var(z) = 1/|J| * sum_j ||z_j - m(z)||^2``; zero exactly when every
    point coincides.
    """
    z = as_points(points)
    if len(z) == 0:
        raise ValueError("empty ensemble")
    dev = z - z.mean(axis=0)
    return float(np.einsum("ij,ij->", dev, dev) / len(z))


@dataclass(frozen=True)
class Objective:
    """A named objective function on a search box.

    ``func`` is vectorised: it maps an ``(n, d)`` array to ``n`` values.
    ``resample``, when set, builds a fresh instance from a seed; benchmark
    batches use it for objectives with random constants.
    """

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    known_argmin: Optional[np.ndarray] = field(default=None, repr=False)
    known_min: Optional[float] = None
    resample: Optional[Callable[[int], "Objective"]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        if np.any(hi < lo):
            raise ValueError("search box has upper < lower")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.known_argmin is not None:
            xs = np.asarray(self.known_argmin, dtype=float).reshape(self.dim)
            if np.any(xs < lo) or np.any(xs > hi):
                raise ValueError("known_argmin lies outside the search box")
            object.__setattr__(self, "known_argmin", xs)

    def evaluate(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"{self.name}: expected shape (n, {self.dim}), got {X.shape}")
        return np.asarray(self.func(X), dtype=float).reshape(len(X))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self.evaluate(x.reshape(1, -1))[0])
        return self.evaluate(x)

    @property
    def search_box(self):
        return np.column_stack([self.lower, self.upper])


@dataclass
class ParticleEnsemble:
    """Active particles of a run, stored row-aligned.

    Row ``r`` of ``positions``, ``personal_bests`` and ``pb_values`` belongs to
    particle ``ids[r]``; ``ids`` is strictly increasing.  ``pos_values`` caches
    the objective at the current positions when the caller needs it (plain CBO).
    """

    ids: np.ndarray
    positions: np.ndarray
    personal_bests: np.ndarray
    pb_values: np.ndarray
    pos_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        n = len(self.ids)
        if self.positions.shape[0] != n or self.personal_bests.shape != self.positions.shape:
            raise ValueError("positions / personal_bests / ids are not aligned")
        if self.pb_values.shape != (n,):
            raise ValueError("pb_values not aligned with ids")
        if n > 1 and np.any(np.diff(self.ids) <= 0):
            raise ValueError("ids must be strictly increasing")

    @property
    def n_active(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def rows_of(self, ids) -> np.ndarray:
        """Row indices of ``ids``; raises if any id is not active."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        rows = np.searchsorted(self.ids, ids)
        rows = np.clip(rows, 0, max(self.n_active - 1, 0))
        if self.n_active == 0 or np.any(self.ids[rows] != ids):
            missing = sorted(set(ids.tolist()) - set(self.ids.tolist()))
            raise KeyError(f"ids not active: {missing}")
        return rows

    def take(self, rows) -> "ParticleEnsemble":
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        return ParticleEnsemble(
            ids=self.ids[rows].copy(),
            positions=self.positions[rows].copy(),
            personal_bests=self.personal_bests[rows].copy(),
            pb_values=self.pb_values[rows].copy(),
            pos_values=None if self.pos_values is None else self.pos_values[rows].copy(),
        )

    def copy(self) -> "ParticleEnsemble":
        return replace(
            self,
            ids=self.ids.copy(),
            positions=self.positions.copy(),
            personal_bests=self.personal_bests.copy(),
            pb_values=self.pb_values.copy(),
            pos_values=None if self.pos_values is None else self.pos_values.copy(),
        )


def init_ensemble(objective: Objective, n: int, sampler: str = "uniform-box",
                  rng: Optional[RngStream] = None) -> ParticleEnsemble:
    """Sample ``n`` particles and set personal bests to the initial positions.

    Parameters
    ----------
    objective : Objective
    n : int
        Number of particles, at least 1.
    sampler : {'uniform-box', 'standard-normal'}
        Uniform over the objective's search box, or i.i.d. N(0, I).
    rng : RngStream, optional
        Defaults to ``RngStream(0)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng or RngStream(0)
    ids = np.arange(n, dtype=np.int64)
    d = objective.dim
    if sampler == "uniform-box":
        u = rng.uniform(DrawKind.INIT, 0, ids, d)
        x = objective.lower + u * (objective.upper - objective.lower)
    elif sampler == "standard-normal":
        x = rng.normal(DrawKind.INIT, 0, ids, d)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    values = objective.evaluate(x)
    if not np.all(np.isfinite(values)):
        bad = ids[~np.isfinite(values)].tolist()
        raise FloatingPointError(f"non-finite objective at initial particles {bad}")
    return ParticleEnsemble(ids=ids, positions=x, personal_bests=x.copy(),
                            pb_values=values.copy(), pos_values=values.copy())
