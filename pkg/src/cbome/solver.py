"""Run loop for consensus-based optimisation with memory effects.

One run goes: sample particles, set bests to positions, then repeat
{position step, best update, stall check, variance-driven discard} until the
iteration budget is spent or the consensus point has stalled for ``n_stall``
consecutive steps.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .consensus import consensus_point
from .dynamics import (
    NonFiniteObjectiveError,
    SmoothBestParams,
    StepParams,
    cbo_me_position_step,
    minibatch_step,
    perturb_restart,
    update_personal_bests_exact,
    update_personal_bests_smooth,
)
from .ensemble import Objective, ParticleEnsemble, ensemble_variance, init_ensemble
from .rng import RngStream
from .selection import SelectionParams, random_discard, reduction_count

__all__ = [
    "AlphaSchedule",
    "SolverConfig",
    "RunReport",
    "BatchResult",
    "alpha_at",
    "run",
    "success_check",
    "weighted_iterations",
    "run_batch",
    "METHODS",
]

METHODS = ("cbo_me", "cbo_plain", "cbo_plain_restart")


@dataclass(frozen=True)
class AlphaSchedule:
    mode: str = "adaptive"
    alpha: float = 10.0

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown alpha mode {self.mode!r}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and non-negative")


def alpha_at(schedule: AlphaSchedule, k: int) -> float:
    """Inverse temperature at iteration ``k``.

    Adaptive mode follows ``alpha0 * k * log2(k)``, floored at ``alpha0``
    (the raw law is 0 at ``k = 1`` and undefined at ``k = 0``).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if schedule.mode == "fixed":
        return float(schedule.alpha)
    a0 = float(schedule.alpha)
    if k < 2:
        return a0
    return max(a0, a0 * k * math.log2(k))


@dataclass
class SolverConfig:
    """Every knob of a run.  Serialisable through :meth:`to_dict`."""

    lam: float = 0.01
    sigma: float = 0.8
    dt: float = 1.0
    noise_mode: str = "anisotropic"
    shared_noise: bool = False
    alpha_mode: str = "adaptive"
    alpha: float = 10.0
    mu: float = 0.0
    n_min: int = 10
    variance_source: str = "positions"
    n0: int = 200
    k_max: int = 10_000
    n_stall: int = 200
    delta_stall: float = 1e-4
    batch_size: Optional[int] = None
    method: str = "cbo_me"
    restart_delta: float = 1e-5
    restart_sigma: float = 0.2
    personal_best: str = "exact"
    nu: float = 1.0
    beta: float = 1e3
    sampler: str = "standard-normal"
    seed: int = 0
    record_points: bool = True

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if self.n_stall < 1:
            raise ValueError("n_stall must be >= 1")
        if not self.delta_stall > 0:
            raise ValueError("delta_stall must be positive")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.personal_best not in ("exact", "smooth"):
            raise ValueError(f"unknown personal_best rule {self.personal_best!r}")
        # validates the nested parameter groups eagerly
        self.step, self.selection, self.alpha_schedule  # noqa: B018

    @property
    def step(self) -> StepParams:
        return StepParams(self.lam, self.sigma, self.dt, self.noise_mode, self.shared_noise)

    @property
    def selection(self) -> SelectionParams:
        return SelectionParams(self.mu, self.n_min, self.variance_source)

    @property
    def alpha_schedule(self) -> AlphaSchedule:
        return AlphaSchedule(self.alpha_mode, self.alpha)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RunReport:
    consensus_values: np.ndarray
    consensus_points: Optional[np.ndarray]
    population: np.ndarray
    variances: np.ndarray
    final_point: np.ndarray
    final_value: float
    iterations: int
    w_iter: float
    evaluations: int
    n0: int
    wall_time: float
    stalled: bool = False
    success: Optional[bool] = None
    error_inf: Optional[float] = None
    degenerate_steps: int = 0
    restarts: int = 0
    sampler: str = "uniform-box"
    seed: int = 0
    extra: dict = field(default_factory=dict)
    final_ensemble: Optional[ParticleEnsemble] = field(default=None, repr=False)

    @property
    def consensus_trajectory(self):
        """``[(k, point or None, value), ...]`` for ``k = 0..iterations``."""
        pts = self.consensus_points
        return [(k, None if pts is None else pts[k], float(v))
                for k, v in enumerate(self.consensus_values)]

    @property
    def population_trajectory(self):
        """``[(k, N_k, var_k), ...]`` for every performed iteration."""
        return [(k, int(n), float(v))
                for k, (n, v) in enumerate(zip(self.population, self.variances))]

    def summary(self) -> dict:
        return {
            "final_value": self.final_value,
            "iterations": self.iterations,
            "w_iter": self.w_iter,
            "evaluations": self.evaluations,
            "success": self.success,
            "error_inf": self.error_inf,
            "stalled": self.stalled,
            "final_population": int(self.population[-1]) if len(self.population) else self.n0,
            "sampler": self.sampler,
            "seed": self.seed,
            "wall_time": self.wall_time,
        }


def weighted_iterations(population_trajectory, n0: Optional[int] = None) -> float:
    """``sum_k N_k / N_0`` over performed iterations.

    Accepts a sequence of counts or of ``(k, N_k, ...)`` tuples.  ``n0``
    defaults to the first count.
    """
    counts = [p[1] if isinstance(p, (tuple, list)) else p for p in population_trajectory]
    if not counts:
        return 0.0
    n0 = counts[0] if n0 is None else n0
    return float(np.sum(np.asarray(counts, dtype=float)) / n0)


def success_check(report: RunReport, objective: Objective,
                  x_tol: float = 0.1, f_tol: float = 0.01) -> bool:
    """A run succeeds if ``||x - x*||_inf < x_tol`` or ``|F(x) - F*| < f_tol``."""
    if objective.known_argmin is None or objective.known_min is None:
        raise ValueError("success undefined: objective has no known optimum")
    err = float(np.max(np.abs(report.final_point - objective.known_argmin)))
    gap = abs(report.final_value - objective.known_min)
    return bool(err < x_tol or gap < f_tol)


def _variance(ens, source):
    return ensemble_variance(ens.positions if source == "positions" else ens.personal_bests)


def run(objective: Objective, cfg: SolverConfig, rng: Optional[RngStream] = None) -> RunReport:
    """Minimise ``objective`` with the method selected in ``cfg``.

    ``rng`` defaults to ``RngStream(cfg.seed)``.  The result is bit-for-bit
    reproducible for a given seed.
    """
    t0 = time.perf_counter()
    rng = rng or RngStream(cfg.seed)
    step = cfg.step
    sel = cfg.selection
    sched = cfg.alpha_schedule
    plain = cfg.method != "cbo_me"
    # plain CBO has no memory: the reduction must watch positions
    source = "positions" if plain else sel.variance_source
    smooth = SmoothBestParams(cfg.nu, cfg.beta) if cfg.personal_best == "smooth" else None

    ens = init_ensemble(objective, cfg.n0, cfg.sampler, rng)
    evaluations = cfg.n0

    def consensus(alpha):
        if plain:
            return consensus_point(ens.positions, ens.pos_values, alpha, ids=ens.ids)
        return consensus_point(ens.personal_bests, ens.pb_values, alpha, ids=ens.ids)

    def value_at(point):
        try:
            v = objective(point)
        except Exception as exc:
            raise RuntimeError(f"iteration {k}: objective failed at consensus point: {exc}") from exc
        return v

    k = 0
    cons = consensus(alpha_at(sched, 0))
    points = [cons.point] if cfg.record_points else None
    values = [value_at(cons.point)]
    population, variances = [], []
    prev_restart_point = None
    n = 0
    degenerate = restarts = 0

    while k < cfg.k_max and n < cfg.n_stall:
        alpha = alpha_at(sched, k)
        try:
            if cfg.method == "cbo_plain_restart":
                if prev_restart_point is not None and \
                        np.max(np.abs(cons.point - prev_restart_point)) <= cfg.restart_delta:
                    perturb_restart(ens, cfg.restart_sigma, rng, k)
                    update_personal_bests_exact(ens, objective)
                    evaluations += ens.n_active
                    restarts += 1
                    cons = consensus(alpha)
                prev_restart_point = cons.point

            n_k = ens.n_active
            var_before = _variance(ens, source)
            if cfg.batch_size is not None and cfg.batch_size < n_k and not plain:
                minibatch_step(ens, step, alpha, cfg.batch_size, rng, k)
            else:
                cbo_me_position_step(ens, cons, step, rng, k)
            if smooth is not None and not plain:
                update_personal_bests_smooth(ens, objective, smooth, cfg.dt)
            else:
                update_personal_bests_exact(ens, objective)
            evaluations += n_k
            var_after = _variance(ens, source)
        except NonFiniteObjectiveError as exc:
            raise NonFiniteObjectiveError(f"iteration {k}: {exc}", exc.particle_ids) from exc

        new_cons = consensus(alpha_at(sched, k + 1))
        if np.linalg.norm(new_cons.point - cons.point) < cfg.delta_stall:
            n += 1
        else:
            n = 0
        cons = new_cons

        population.append(n_k)
        variances.append(var_before)
        if not var_before > 0:
            degenerate += 1
        n_next = reduction_count(n_k, var_before, var_after, sel)
        if n_next < n_k:
            ens = random_discard(ens, n_next, rng, k)
        k += 1
        if points is not None:
            points.append(cons.point)
        values.append(value_at(cons.point))

    report = RunReport(
        consensus_values=np.asarray(values),
        consensus_points=None if points is None else np.asarray(points),
        population=np.asarray(population, dtype=np.int64),
        variances=np.asarray(variances),
        final_point=cons.point,
        final_value=float(values[-1]),
        iterations=k,
        w_iter=weighted_iterations(population, cfg.n0),
        evaluations=evaluations,
        n0=cfg.n0,
        wall_time=time.perf_counter() - t0,
        stalled=n >= cfg.n_stall,
        degenerate_steps=degenerate,
        restarts=restarts,
        sampler=cfg.sampler,
        seed=rng.seed,
        final_ensemble=ens,
    )
    if objective.known_argmin is not None and objective.known_min is not None:
        report.error_inf = float(np.max(np.abs(cons.point - objective.known_argmin)))
        report.success = success_check(report, objective)
    report.wall_time = time.perf_counter() - t0
    return report


@dataclass
class BatchResult:
    n_runs: int
    success_rate: Optional[float]
    mean_error: Optional[float]
    mean_value: float
    mean_iterations: float
    mean_w_iter: float
    mean_wall_time: float
    cts_wall: Optional[float] = None
    cts_w_iter: Optional[float] = None
    reports: list = field(default_factory=list, repr=False)

    def with_reference(self, reference: "BatchResult") -> "BatchResult":
        """Fill the computational-time-saved fields against a ``mu = 0`` batch."""
        self.cts_wall = 1.0 - self.mean_wall_time / reference.mean_wall_time
        self.cts_w_iter = 1.0 - self.mean_w_iter / reference.mean_w_iter
        return self


def _one_run(objective, cfg, index):
    rng = RngStream(cfg.seed).spawn(index)
    obj = objective.resample(rng.seed) if objective.resample is not None else objective
    return run(obj, cfg, rng)


def run_batch(objective: Objective, cfg: SolverConfig, n_runs: int,
              reference: Optional[BatchResult] = None, n_jobs: int = 1) -> BatchResult:
    """Repeat :func:`run` with seeds derived from ``cfg.seed`` and aggregate.

    Objectives with random constants (``resample`` set) are redrawn per run.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if n_jobs == 1:
        reports = [_one_run(objective, cfg, i) for i in range(n_runs)]
    else:
        from joblib import Parallel, delayed

        reports = Parallel(n_jobs=n_jobs)(delayed(_one_run)(objective, cfg, i) for i in range(n_runs))
    succ = [r.success for r in reports]
    errs = [r.error_inf for r in reports]
    result = BatchResult(
        n_runs=n_runs,
        success_rate=None if None in succ else float(np.mean(succ)),
        mean_error=None if None in errs else float(np.mean(errs)),
        mean_value=float(np.mean([r.final_value for r in reports])),
        mean_iterations=float(np.mean([r.iterations for r in reports])),
        mean_w_iter=float(np.mean([r.w_iter for r in reports])),
        mean_wall_time=float(np.mean([r.wall_time for r in reports])),
        reports=reports,
    )
    if reference is not None:
        result.with_reference(reference)
    return result
