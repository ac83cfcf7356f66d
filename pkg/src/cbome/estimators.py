"""Estimator-style wrappers (``get_params``/``set_params``, fitted ``*_`` attributes)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ensemble import Objective
from .nnapprox import CBOMLPRegressor
from .segmentation import OtsuSegmenter
from .solver import SolverConfig, run

__all__ = ["CBOMinimizer", "CBOMLPRegressor", "OtsuSegmenter"]


class CBOMinimizer(BaseEstimator):
    """Global minimiser with memory effects and random particle selection.

    Parameters mirror :class:`~cbome.solver.SolverConfig`.  ``fit`` takes an
    :class:`~cbome.ensemble.Objective`.

    Attributes
    ----------
    x_ : ndarray
        Final consensus point.
    fun_ : float
        Objective value at ``x_``.
    n_iter_ : int
    report_ : RunReport

    Examples
    --------
    >>> from cbome import CBOMinimizer, make_benchmark
    >>> est = CBOMinimizer(n_particles=50, max_iter=200).fit(make_benchmark("sphere", 2))
    >>> bool(est.fun_ < 1e-3)
    True
    """

    def __init__(self, n_particles=200, max_iter=10_000, lam=0.01, sigma=0.8, alpha=10.0,
                 alpha_mode="adaptive", mu=0.0, n_min=10, n_stall=200, delta_stall=1e-4,
                 method="cbo_me", sampler="standard-normal", random_state=0):
        self.n_particles = n_particles
        self.max_iter = max_iter
        self.lam = lam
        self.sigma = sigma
        self.alpha = alpha
        self.alpha_mode = alpha_mode
        self.mu = mu
        self.n_min = n_min
        self.n_stall = n_stall
        self.delta_stall = delta_stall
        self.method = method
        self.sampler = sampler
        self.random_state = random_state

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            lam=self.lam, sigma=self.sigma, alpha=self.alpha, alpha_mode=self.alpha_mode,
            mu=self.mu, n_min=min(self.n_min, self.n_particles), n0=self.n_particles,
            k_max=self.max_iter, n_stall=self.n_stall, delta_stall=self.delta_stall,
            method=self.method, sampler=self.sampler, seed=int(self.random_state or 0),
            record_points=False)

    def fit(self, objective: Objective, y=None):
        if not isinstance(objective, Objective):
            raise TypeError("fit expects an Objective")
        self.report_ = run(objective, self.solver_config())
        self.x_ = np.asarray(self.report_.final_point)
        self.fun_ = self.report_.final_value
        self.n_iter_ = self.report_.iterations
        return self

    def score(self, objective: Objective, y=None) -> float:
        """Negated objective value at ``x_`` (higher is better)."""
        check_is_fitted(self, "x_")
        return -float(objective(self.x_))
