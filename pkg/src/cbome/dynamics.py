"""Single-step particle updates.

All position updates move particles toward a consensus point with a drift of
strength ``lam`` and a multiplicative Gaussian kick of strength ``sigma``.
Noise for particle ``i`` at iteration ``k`` comes from the counter-based
stream, so batching or discarding other particles never changes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .consensus import ConsensusPoint, consensus_point, consensus_subset
from .ensemble import Objective, ParticleEnsemble
from .rng import SHARED_ID, DrawKind, RngStream

__all__ = [
    "NonFiniteObjectiveError",
    "StepParams",
    "SmoothBestParams",
    "psi_rational",
    "cbo_me_position_step",
    "cbo_plain_position_step",
    "update_personal_bests_exact",
    "update_personal_bests_smooth",
    "perturb_restart",
    "minibatch_step",
]


class NonFiniteObjectiveError(FloatingPointError):
    """The objective returned NaN or inf; ``particle_ids`` lists the culprits."""

    def __init__(self, message, particle_ids=()):
        super().__init__(message)
        self.particle_ids = list(particle_ids)


@dataclass(frozen=True)
class StepParams:
    """Drift/noise parameters of one update.

    With ``dt != 1`` the effective drift is ``lam * dt`` and the effective
    noise ``sigma * sqrt(dt)`` (Euler-Maruyama scaling).
    """

    lam: float
    sigma: float
    dt: float = 1.0
    noise_mode: str = "anisotropic"
    shared_noise: bool = False

    def __post_init__(self):
        if self.lam < 0 or self.sigma < 0:
            raise ValueError("lam and sigma must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.noise_mode not in ("anisotropic", "isotropic"):
            raise ValueError(f"unknown noise_mode {self.noise_mode!r}")
        if not np.isfinite(self.sigma * np.sqrt(self.dt)):
            raise ValueError("sigma * sqrt(dt) must be finite")

    @property
    def drift(self) -> float:
        return self.lam * self.dt

    @property
    def diffusion(self) -> float:
        return self.sigma * np.sqrt(self.dt)


def psi_rational(s):
    """Transition profile: 0 for ``s <= 0``, ``s^2 / (1 + s^2)`` above."""
    s = np.asarray(s, dtype=float)
    pos = np.maximum(s, 0.0)
    return pos * pos / (1.0 + pos * pos)


@dataclass(frozen=True)
class SmoothBestParams:
    nu: float = 1.0
    beta: float = 1.0
    psi: Callable = psi_rational

    def __post_init__(self):
        if not (self.nu > 0 and self.beta > 0):
            raise ValueError("nu and beta must be positive")


def _draw_theta(rng, ids, iteration, dim, shared):
    if shared:
        theta = rng.normal(DrawKind.STEP_NOISE, iteration, [SHARED_ID], dim)
        return np.broadcast_to(theta, (len(ids), dim))
    return rng.normal(DrawKind.STEP_NOISE, iteration, ids, dim)


def _move(x, target, p: StepParams, theta):
    diff = target - x
    if p.noise_mode == "anisotropic":
        kick = diff * theta
    else:
        kick = np.linalg.norm(diff, axis=1, keepdims=True) * theta
    return x + p.drift * diff + p.diffusion * kick


def cbo_me_position_step(ensemble: ParticleEnsemble, consensus: ConsensusPoint,
                         p: StepParams, rng: RngStream, iteration: int = 0):
    """Move every active particle toward ``consensus`` in place.

    Personal bests are left alone.  Returns the ensemble.
    """
    target = np.asarray(consensus.point, dtype=float)
    if target.shape != (ensemble.dim,):
        raise ValueError(f"consensus dim {target.shape} != ensemble dim {ensemble.dim}")
    if not np.all(np.isfinite(target)):
        raise FloatingPointError("non-finite consensus point")
    theta = _draw_theta(rng, ensemble.ids, iteration, ensemble.dim, p.shared_noise)
    ensemble.positions = _move(ensemble.positions, target, p, theta)
    ensemble.pos_values = None
    return ensemble


def _evaluate_positions(ensemble, objective):
    values = objective.evaluate(ensemble.positions)
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteObjectiveError(
            f"non-finite objective at particles {ensemble.ids[bad].tolist()}",
            ensemble.ids[bad].tolist())
    ensemble.pos_values = values
    return values


def update_personal_bests_exact(ensemble: ParticleEnsemble, objective: Objective):
    """Replace a personal best only on strict improvement.

    Evaluates the objective once per active particle and returns the number
    of particles whose best changed.
    """
    values = _evaluate_positions(ensemble, objective)
    better = values < ensemble.pb_values
    ensemble.personal_bests[better] = ensemble.positions[better]
    ensemble.pb_values[better] = values[better]
    return int(better.sum())


def update_personal_bests_smooth(ensemble: ParticleEnsemble, objective: Objective,
                                 sp: SmoothBestParams, dt: float = 1.0):
    """Move each personal best part of the way toward its particle.

    ``y <- y + (nu*dt/2) * (x - y) * S`` with ``S = 2*psi(beta*(F(y) - F(x)))``.
    Since ``S <= 2`` the step fraction stays in ``[0, 1]`` iff ``nu*dt <= 1``.
    """
    if sp.nu * dt * 2.0 > 2.0:
        raise ValueError("overshoot: reduce nu*dt")
    fx = _evaluate_positions(ensemble, objective)
    s = 2.0 * sp.psi(sp.beta * (ensemble.pb_values - fx))
    frac = (sp.nu * dt / 2.0) * s
    moving = frac > 0
    if moving.any():
        y = ensemble.personal_bests
        y[moving] = y[moving] + frac[moving, None] * (ensemble.positions[moving] - y[moving])
        fy = objective.evaluate(y[moving])
        if not np.all(np.isfinite(fy)):
            raise NonFiniteObjectiveError("non-finite objective at smoothed best",
                                          ensemble.ids[moving][~np.isfinite(fy)].tolist())
        ensemble.pb_values[moving] = fy
    return int(moving.sum())


def cbo_plain_position_step(ensemble: ParticleEnsemble, p: StepParams, alpha: float,
                            rng: RngStream, iteration: int = 0, objective: Objective = None):
    """CBO step without memory: the consensus is built from current positions.

    Needs ``ensemble.pos_values``; pass ``objective`` to have them computed
    when missing.  Returns the consensus that was used.
    """
    if ensemble.pos_values is None:
        if objective is None:
            raise ValueError("position values unknown; pass the objective")
        _evaluate_positions(ensemble, objective)
    cons = consensus_point(ensemble.positions, ensemble.pos_values, alpha, ids=ensemble.ids)
    cbo_me_position_step(ensemble, cons, p, rng, iteration)
    return cons


def perturb_restart(ensemble: ParticleEnsemble, sigma: float, rng: RngStream, iteration: int = 0):
    """Add an i.i.d. ``N(0, sigma^2 I)`` kick to every active position."""
    if sigma == 0:
        return ensemble
    kick = rng.normal(DrawKind.PERTURB, iteration, ensemble.ids, ensemble.dim)
    ensemble.positions = ensemble.positions + sigma * kick
    ensemble.pos_values = None
    return ensemble


def minibatch_step(ensemble: ParticleEnsemble, p: StepParams, alpha: float, batch_size: int,
                   rng: RngStream, iteration: int = 0, objective: Objective = None):
    """Shuffle the active particles, split them into batches, step each batch
    toward its own consensus, then (if ``objective`` is given) update bests.

    Returns the list of id batches in processing order.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = rng.generator(DrawKind.PERMUTE, iteration).permutation(ensemble.ids)
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    theta = _draw_theta(rng, ensemble.ids, iteration, ensemble.dim, p.shared_noise)
    new_x = ensemble.positions.copy()
    for batch in batches:
        cons = consensus_subset(ensemble, batch, alpha)
        rows = ensemble.rows_of(batch)
        new_x[rows] = _move(ensemble.positions[rows], cons.point, p, theta[rows])
    ensemble.positions = new_x
    ensemble.pos_values = None
    if objective is not None:
        update_personal_bests_exact(ensemble, objective)
    return batches
