"""Gibbs-weighted consensus point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import ParticleEnsemble, as_points

__all__ = ["ConsensusPoint", "consensus_point", "consensus_subset", "gibbs_weights"]


@dataclass(frozen=True)
class ConsensusPoint:
    point: np.ndarray
    effective_alpha: float
    participant_ids: frozenset

    @property
    def dim(self) -> int:
        return len(self.point)


def gibbs_weights(values, alpha: float) -> np.ndarray:
    """Normalised weights ``exp(-alpha * (F_i - min F))``.

    Subtracting the minimum leaves the normalised weights unchanged and keeps
    the largest term at exactly 1, so nothing overflows for large ``alpha``.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty ensemble")
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite objective")
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    w = np.exp(-alpha * (v - v.min()))
    return w / w.sum()


def consensus_point(pbs, values, alpha: float, ids=None) -> ConsensusPoint:
    """Weighted average of ``pbs`` with Gibbs weights at inverse temperature ``alpha``.

    Parameters
    ----------
    pbs : array_like, shape (n, d)
        Personal bests (or positions, for plain CBO).
    values : array_like, shape (n,)
        Objective values at ``pbs``.
    alpha : float
        Non-negative weight sharpness. ``alpha = 0`` gives the plain mean.
    ids : array_like, optional
        Particle ids recorded as participants; defaults to ``range(n)``.
    """
    y = as_points(pbs)
    v = np.asarray(values, dtype=float).reshape(-1)
    if len(y) == 0:
        raise ValueError("empty ensemble")
    if len(v) != len(y):
        raise ValueError("pbs and values differ in length")
    w = gibbs_weights(v, alpha)
    point = w @ y
    if ids is None:
        ids = range(len(y))
    return ConsensusPoint(point=point, effective_alpha=float(alpha),
                          participant_ids=frozenset(int(i) for i in ids))


def consensus_subset(ensemble: ParticleEnsemble, ids, alpha: float) -> ConsensusPoint:
    """Consensus over the personal bests of the listed active particles."""
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    if ids.size == 0:
        raise ValueError("empty ensemble")
    try:
        rows = ensemble.rows_of(ids)
    except KeyError as exc:
        raise ValueError(f"ids are not a subset of the active set: {exc}") from None
    return consensus_point(ensemble.personal_bests[rows], ensemble.pb_values[rows], alpha, ids=ids)
