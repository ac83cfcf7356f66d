"""Variance-triggered shrinking of the active particle set."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .ensemble import ParticleEnsemble
from .rng import DrawKind, RngStream

__all__ = ["SelectionParams", "reduction_count", "random_discard"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SelectionParams:
    mu: float = 0.0
    n_min: int = 1
    variance_source: str = "positions"

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")
        if self.variance_source not in ("positions", "personal_bests"):
            raise ValueError(f"unknown variance_source {self.variance_source!r}")


def reduction_count(n_current: int, var_before: float, var_after: float,
                    sp: SelectionParams) -> int:
    """Number of particles to keep after a step.

    ``floor(N * (1 + mu * (var_after - var_before) / var_before))`` clamped to
    ``[n_min, N]``.  A zero ``var_before`` (fully collapsed ensemble) skips the
    reduction for this step.
    """
    if not var_before > 0:
        logger.debug("degenerate variance %r: no reduction", var_before)
        return int(n_current)
    ratio = (var_after - var_before) / var_before
    n_tilde = math.floor(n_current * (1.0 + sp.mu * ratio))
    return int(min(max(n_tilde, sp.n_min), n_current))


def random_discard(ensemble: ParticleEnsemble, n_keep: int, rng: RngStream,
                   iteration: int = 0) -> ParticleEnsemble:
    """Keep a uniformly random ``n_keep``-subset of the active particles.

    Survivors are copied untouched; the input ensemble is not modified.
    """
    n = ensemble.n_active
    if n_keep > n:
        raise ValueError(f"cannot keep {n_keep} of {n} particles")
    if n_keep < 1:
        raise ValueError("n_keep must be >= 1")
    if n_keep == n:
        return ensemble
    rows = rng.generator(DrawKind.DISCARD, iteration).choice(n, size=n_keep, replace=False)
    return ensemble.take(np.sort(rows))
