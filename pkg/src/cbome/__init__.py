"""Consensus-based optimisation with memory effects and random particle selection."""

from .benchmarks import BENCHMARKS, make_benchmark
from .consensus import ConsensusPoint, consensus_point, gibbs_weights
from .ensemble import Objective, ParticleEnsemble, ensemble_mean, ensemble_variance, init_ensemble
from .estimators import CBOMinimizer, CBOMLPRegressor, OtsuSegmenter
from .rng import DrawKind, RngStream
from .selection import SelectionParams, random_discard, reduction_count
from .solver import BatchResult, RunReport, SolverConfig, run, run_batch, weighted_iterations

__version__ = "0.1.0"

__all__ = [
    "BENCHMARKS",
    "BatchResult",
    "CBOMLPRegressor",
    "CBOMinimizer",
    "ConsensusPoint",
    "DrawKind",
    "Objective",
    "OtsuSegmenter",
    "ParticleEnsemble",
    "RngStream",
    "RunReport",
    "SelectionParams",
    "SolverConfig",
    "consensus_point",
    "ensemble_mean",
    "ensemble_variance",
    "gibbs_weights",
    "init_ensemble",
    "make_benchmark",
    "random_discard",
    "reduction_count",
    "run",
    "run_batch",
    "weighted_iterations",
]
