"""Gradient-free training of a small sigmoid network on 1-d targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .ensemble import Objective
from .solver import RunReport, SolverConfig, run

__all__ = [
    "MlpShape",
    "mlp_forward",
    "mlp_forward_batch",
    "u1",
    "u2",
    "TARGETS",
    "default_grid",
    "l2_loss",
    "training_problem",
    "train",
    "random_loss_median",
    "CBOMLPRegressor",
]


@dataclass(frozen=True)
class MlpShape:
    """Fully connected ``1 -> n -> ... -> n -> 1`` network with ``m`` layers.

    ``m - 1`` sigmoid hidden layers and an affine output layer.  The flat
    parameter vector stores, layer by layer, the weight matrix (row-major)
    followed by its bias.
    """

    m: int = 3
    n: int = 50

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def layer_shapes(self):
        return [(self.n, 1)] + [(self.n, self.n)] * (self.m - 2) + [(1, self.n)]

    @property
    def n_params(self) -> int:
        return sum(r * c + r for r, c in self.layer_shapes)

    def unflatten(self, theta):
        """Split ``theta`` of shape ``(..., n_params)`` into ``[(W, b), ...]``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape[-1]}")
        lead = theta.shape[:-1]
        out, pos = [], 0
        for r, c in self.layer_shapes:
            W = theta[..., pos:pos + r * c].reshape(*lead, r, c)
            pos += r * c
            b = theta[..., pos:pos + r]
            pos += r
            out.append((W, b))
        return out

    def flatten(self, layers) -> np.ndarray:
        parts = []
        for (W, b), (r, c) in zip(layers, self.layer_shapes):
            W, b = np.asarray(W, float), np.asarray(b, float)
            if W.shape[-2:] != (r, c) or b.shape[-1] != r:
                raise ValueError(f"layer shape mismatch: expected W {(r, c)}, b {(r,)}")
            parts += [W.reshape(*W.shape[:-2], r * c), b]
        return np.concatenate(parts, axis=-1)


def _sigmoid(z):
    # tanh form is overflow free
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def mlp_forward_batch(shape: MlpShape, Theta, x) -> np.ndarray:
    """Network outputs for ``P`` parameter vectors on ``G`` inputs, shape ``(P, G)``."""
    Theta = np.atleast_2d(Theta)
    x = np.asarray(x, dtype=float).ravel()
    layers = shape.unflatten(Theta)
    W, b = layers[0]
    h = _sigmoid(x[None, :, None] * W[:, None, :, 0] + b[:, None, :])
    for W, b in layers[1:-1]:
        h = _sigmoid(np.matmul(h, np.swapaxes(W, -1, -2)) + b[:, None, :])
    W, b = layers[-1]
    return np.matmul(h, W[:, 0, :, None])[..., 0] + b


def mlp_forward(shape: MlpShape, theta, x):
    """Network output for one parameter vector; scalar in, scalar out."""
    out = mlp_forward_batch(shape, np.asarray(theta)[None, :], np.atleast_1d(x))[0]
    return float(out[0]) if np.ndim(x) == 0 else out


def u1(x):
    x = np.asarray(x, dtype=float)
    return np.sin(2 * np.pi * x) + np.sin(8 * np.pi * x**2)


def u2(x):
    x = np.asarray(x, dtype=float)
    one = (x < -7 / 8) | ((x > -1 / 8) & (x < 1 / 8)) | (x > 7 / 8)
    minus = ((x > 3 / 8) & (x < 5 / 8)) | ((x > -5 / 8) & (x < -3 / 8))
    return one.astype(float) - minus.astype(float)


TARGETS = {"u1": u1, "u2": u2}


def default_grid(size: int = 256) -> np.ndarray:
    return np.linspace(-1.0, 1.0, size)


def _target(target):
    if callable(target):
        return target
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
    return TARGETS[target]


def l2_loss(shape: MlpShape, theta, target, grid=None) -> float:
    """Root mean squared error over the grid (discrete L2 norm on [-1, 1])."""
    x = default_grid() if grid is None else np.asarray(grid, float)
    pred = mlp_forward_batch(shape, np.asarray(theta)[None, :], x)[0]
    return float(np.sqrt(np.mean((pred - _target(target)(x)) ** 2)))


def _batched_loss(shape, x, y, chunk=128):
    def f(Theta):
        out = np.empty(len(Theta))
        for s in range(0, len(Theta), chunk):
            pred = mlp_forward_batch(shape, Theta[s:s + chunk], x)
            out[s:s + chunk] = np.sqrt(np.mean((pred - y) ** 2, axis=1))
        return out

    return f


def training_problem(shape: MlpShape, x, y, name="mlp") -> Objective:
    """Loss over flat parameter vectors as a minimisation problem."""
    x = np.asarray(x, float).ravel()
    y = np.asarray(y, float).ravel()
    # box is only nominal; training starts from standard normals
    return Objective(name=name, dim=shape.n_params, func=_batched_loss(shape, x, y),
                     lower=-10.0, upper=10.0)


DEFAULT_TRAIN_CONFIG = SolverConfig(lam=0.01, sigma=0.8, n0=500, k_max=2000, mu=0.1, n_min=10,
                                    sampler="standard-normal", record_points=False,
                                    n_stall=10**9)


def train(shape: MlpShape, target, cfg: SolverConfig = None, grid=None):
    """Fit the network to ``target`` on ``grid``.

    Returns ``(theta, report)``; ``report.consensus_values`` is the loss of the
    consensus parameters per iteration.
    """
    cfg = cfg or DEFAULT_TRAIN_CONFIG
    if cfg.sampler != "standard-normal":
        raise ValueError("network training expects the standard-normal sampler")
    x = default_grid() if grid is None else np.asarray(grid, float)
    name = target if isinstance(target, str) else getattr(target, "__name__", "target")
    report: RunReport = run(training_problem(shape, x, _target(target)(x), name), cfg)
    return report.final_point, report


def random_loss_median(shape: MlpShape, target, draws: int = 500, seed: int = 0,
                       grid=None) -> float:
    """Median loss of ``draws`` standard-normal parameter vectors."""
    from .rng import DrawKind, RngStream

    x = default_grid() if grid is None else np.asarray(grid, float)
    Theta = RngStream(seed).normal(DrawKind.EXPERIMENT, 0, np.arange(draws), shape.n_params)
    return float(np.median(_batched_loss(shape, x, _target(target)(x))(Theta)))


class CBOMLPRegressor(RegressorMixin, BaseEstimator):
    """One-input sigmoid network trained without gradients.

    Parameters
    ----------
    n_layers : int
        Number of weight layers ``m``.
    width : int
        Hidden width ``n``.
    n_particles, max_iter, lam, sigma, mu, random_state
        Forwarded to the solver.

    Attributes
    ----------
    coef_ : ndarray
        Flat parameter vector.
    loss_curve_ : ndarray
        Training loss of the consensus per iteration.
    """

    def __init__(self, n_layers=3, width=50, n_particles=500, max_iter=2000, lam=0.01,
                 sigma=0.8, mu=0.1, random_state=0):
        self.n_layers = n_layers
        self.width = width
        self.n_particles = n_particles
        self.max_iter = max_iter
        self.lam = lam
        self.sigma = sigma
        self.mu = mu
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError("only a single input feature is supported")
        self.shape_ = MlpShape(self.n_layers, self.width)
        cfg = DEFAULT_TRAIN_CONFIG.replace(
            n0=self.n_particles, k_max=self.max_iter, lam=self.lam, sigma=self.sigma,
            mu=self.mu, seed=int(self.random_state or 0))
        self.report_ = run(training_problem(self.shape_, X[:, 0], y), cfg)
        self.coef_ = self.report_.final_point
        self.loss_curve_ = self.report_.consensus_values
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return mlp_forward_batch(self.shape_, self.coef_[None, :], X[:, 0])[0]
