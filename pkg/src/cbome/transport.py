"""Exact 2-Wasserstein distance between uniform empirical measures, and the
random-selection stability experiment built on it.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .ensemble import as_points, ensemble_variance
from .rng import DrawKind, RngStream

# POT probes every installed array backend on import; only numpy is needed here
for _backend in ("PYTORCH", "TENSORFLOW", "JAX", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")
import ot  # noqa: E402

__all__ = [
    "EmpiricalMeasure",
    "TransportPlan",
    "w2_distance",
    "w2_bruteforce_equal_size",
    "selection_bound_experiment",
    "SELECTION_CSV_HEADER",
]

SELECTION_CSV_HEADER = ("d", "n_sel", "empirical_w2sq", "bound_prop4", "bound_mc", "trials")


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Point cloud with mass ``1/n`` on each atom."""

    support: np.ndarray

    def __post_init__(self):
        pts = as_points(self.support)
        if len(pts) == 0:
            raise ValueError("empty support")
        object.__setattr__(self, "support", pts)

    def __len__(self):
        return len(self.support)

    @property
    def dim(self):
        return self.support.shape[1]

    @property
    def weights(self):
        return np.full(len(self), 1.0 / len(self))


@dataclass(frozen=True)
class TransportPlan:
    weights: np.ndarray  # (len(a), len(b)) coupling
    cost: float          # sum_ij w_ij ||a_i - b_j||^2


def _measure(x):
    return x if isinstance(x, EmpiricalMeasure) else EmpiricalMeasure(x)


def sq_dist(a, b):
    """Pairwise squared Euclidean distances."""
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _solve_lp(wa, wb, M):
    na, nb = M.shape
    rows = sparse.kron(sparse.eye(na), np.ones((1, nb)))
    cols = sparse.kron(np.ones((1, na)), sparse.eye(nb))
    res = linprog(M.ravel(), A_eq=sparse.vstack([rows, cols]), b_eq=np.concatenate([wa, wb]),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return res.x.reshape(na, nb)


def w2_distance(a, b, method: str = "network-simplex"):
    """Exact W2 between two uniform empirical measures.

    Parameters
    ----------
    a, b : EmpiricalMeasure or array_like of shape (n, d)
    method : {'network-simplex', 'lp'}
        Network simplex (POT) or a dense LP solved by HiGHS.  Both are exact.

    Returns
    -------
    distance : float
    plan : TransportPlan
    """
    a, b = _measure(a), _measure(b)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    M = sq_dist(a.support, b.support)
    scale = M.max()
    if scale == 0:
        w = np.outer(a.weights, b.weights)
        return 0.0, TransportPlan(w, 0.0)
    # cost scaled to [0, 1] for the solver; the plan is scale-free
    if method == "network-simplex":
        w = ot.emd(a.weights, b.weights, M / scale, numItermax=10_000_000)
    elif method == "lp":
        w = _solve_lp(a.weights, b.weights, M / scale)
    else:
        raise ValueError(f"unknown method {method!r}")
    cost = float(np.sum(w * M))
    return float(np.sqrt(max(cost, 0.0))), TransportPlan(w, cost)


def w2_bruteforce_equal_size(a, b) -> float:
    """W2 by enumerating all permutations; for ``n <= 6`` equal-size clouds.

    With equal sizes and uniform masses an optimal plan is a permutation,
    so the minimum over ``n!`` assignments is exact.
    """
    a, b = as_points(a), as_points(b)
    n = len(a)
    if len(b) != n:
        raise ValueError("sizes differ")
    if n == 0 or n > 6:
        raise ValueError("brute force supports 1 <= n <= 6")
    best = np.inf
    for perm in itertools.permutations(range(n)):
        c = sum(float(np.sum((a[i] - b[j]) ** 2)) for i, j in enumerate(perm))
        best = min(best, c)
    return float(np.sqrt(best / n))


def selection_bound_experiment(n: int = 100, dims=(3, 10), n_sel_grid=None, trials: int = 500,
                               rng: RngStream = None, cloud=None):
    """Monte-Carlo mean of ``W2^2(mu_N, mu_Nsel)`` under uniform random subsets.

    One cloud per dimension (uniform on ``[0,1]^d`` unless ``cloud`` is given
    as a mapping ``d -> points``).  For each ``n_sel`` the mean over ``trials``
    subsets is compared with ``2 var (N - Nsel)/(N - 1)`` and with the
    Monte-Carlo-style rate ``2 var (N - Nsel)/((N - 1)(Nsel - 1))``.

    Returns a list of row dicts keyed by ``SELECTION_CSV_HEADER``.
    """
    rng = rng or RngStream(0)
    if n_sel_grid is None:
        n_sel_grid = range(2, n)
    rows = []
    for d in dims:
        if cloud is not None:
            z = as_points(cloud[d])
            if len(z) != n:
                raise ValueError(f"cloud for d={d} has {len(z)} points, expected {n}")
        else:
            z = rng.uniform(DrawKind.EXPERIMENT, d, np.arange(n), d)
        var = ensemble_variance(z)
        D = sq_dist(z, z)
        scale = D.max() if D.max() > 0 else 1.0
        wa = np.full(n, 1.0 / n)
        for n_sel in n_sel_grid:
            if not 1 <= n_sel < n:
                raise ValueError(f"n_sel must lie in [1, {n - 1}], got {n_sel}")
            gen = rng.generator(DrawKind.DISCARD, d * 65536 + n_sel)
            wb = np.full(n_sel, 1.0 / n_sel)
            acc = 0.0
            for _ in range(trials):
                idx = np.sort(gen.choice(n, size=n_sel, replace=False))
                M = D[:, idx]
                w = ot.emd(wa, wb, M / scale, numItermax=10_000_000)
                acc += float(np.sum(w * M))
            bound = 2.0 * var * (n - n_sel) / (n - 1)
            bound_mc = bound / (n_sel - 1) if n_sel > 1 else np.inf
            rows.append({"d": d, "n_sel": n_sel, "empirical_w2sq": acc / trials,
                         "bound_prop4": bound, "bound_mc": bound_mc, "trials": trials})
    return rows
