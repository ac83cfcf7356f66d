"""Benchmark objectives for global optimisation.

Each function takes an ``(n, d)`` array and returns ``n`` values.
"""

from __future__ import annotations

import numpy as np

from .ensemble import Objective
from .rng import DrawKind, RngStream

__all__ = ["BENCHMARKS", "make_benchmark", "sphere"]


def ackley(X):
    d = X.shape[1]
    return (-20.0 * np.exp(-0.2 * np.sqrt(np.sum(X**2, axis=1) / d))
            - np.exp(np.sum(np.cos(2 * np.pi * X), axis=1) / d) + 20.0 + np.e)


def griewank(X):
    i = np.arange(1, X.shape[1] + 1)
    # divisor i (not sqrt(i)), as in the reference table
    return 1.0 + np.sum(X**2, axis=1) / 4000.0 - np.prod(np.cos(X / i), axis=1)


def rastrigin(X):
    return 10.0 * X.shape[1] + np.sum(X**2 - 10.0 * np.cos(2 * np.pi * X), axis=1)


def rosenbrock(X):
    return np.sum(100.0 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (1.0 - X[:, :-1]) ** 2, axis=1)


def salomon(X):
    r = np.sqrt(np.sum(X**2, axis=1))
    return 1.0 - np.cos(2 * np.pi * r) + 0.1 * r


def schwefel220(X):
    return np.sum(np.abs(X), axis=1)


def xsy4(X):
    a = np.sum(np.sin(X) ** 2, axis=1) - np.exp(-np.sum(X**2, axis=1))
    return a * np.exp(-np.sum(np.sin(np.sqrt(np.abs(X))) ** 2, axis=1))


def _xsy_random(eta):
    powers = np.arange(1, len(eta) + 1)

    def f(X):
        return np.sum(eta * np.abs(X) ** powers, axis=1)

    return f


def sphere(X):
    return np.sum(X**2, axis=1)


# name -> (function, lower, upper, argmin value per coordinate, minimum)
BENCHMARKS = {
    "ackley": (ackley, -32.0, 32.0, 0.0, 0.0),
    "griewank": (griewank, -600.0, 600.0, 0.0, 0.0),
    "rastrigin": (rastrigin, -5.12, 5.12, 0.0, 0.0),
    "rosenbrock": (rosenbrock, -5.0, 10.0, 1.0, 0.0),
    "salomon": (salomon, -100.0, 100.0, 0.0, 0.0),
    "schwefel220": (schwefel220, -100.0, 100.0, 0.0, 0.0),
    "xsy_random": (None, -5.0, 5.0, 0.0, 0.0),
    "xsy4": (xsy4, -10.0, 10.0, 0.0, -1.0),
    "sphere": (sphere, -5.0, 5.0, 0.0, 0.0),
}


def make_benchmark(name: str, dim: int, rng=None) -> Objective:
    """Build a benchmark objective.

    Parameters
    ----------
    name : str
        One of ``BENCHMARKS``.
    dim : int
        Search-space dimension.
    rng : RngStream or int, optional
        Only used by ``xsy_random``, whose weights ``eta_i ~ U[0, 1)`` are
        drawn once here and frozen.
    """
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if rng is None:
        rng = RngStream(0)
    elif not isinstance(rng, RngStream):
        rng = RngStream(int(rng))
    func, lo, hi, xstar, fstar = BENCHMARKS[name]
    resample = None
    if name == "xsy_random":
        eta = rng.uniform(DrawKind.CONSTANTS, 0, [0], dim)[0]
        func = _xsy_random(eta)
        resample = lambda seed: make_benchmark(name, dim, RngStream(seed))  # noqa: E731
    return Objective(name=name, dim=dim, func=func, lower=lo, upper=hi,
                     known_argmin=np.full(dim, xstar), known_min=fstar, resample=resample)
