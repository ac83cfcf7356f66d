"""Multilevel Otsu thresholding driven by the particle solver."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ensemble import Objective
from .solver import RunReport, SolverConfig, run

__all__ = [
    "LEVELS",
    "GrayImage",
    "Histogram",
    "PGMError",
    "read_pgm",
    "write_pgm",
    "histogram",
    "otsu_objective",
    "otsu_scores",
    "repair_thresholds",
    "exhaustive_otsu",
    "apply_thresholds",
    "segment",
    "psnr",
    "rmse",
    "uniform_thresholds",
    "OtsuSegmenter",
]

LEVELS = 256


class PGMError(ValueError):
    pass


@dataclass
class GrayImage:
    """8-bit grayscale image, ``pixels`` of shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("pixels must be 2-d (height, width)")
        if px.size and (px.min() < 0 or px.max() > LEVELS - 1):
            raise ValueError("pixel levels must lie in 0..255")
        self.pixels = px.astype(np.uint8)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


def _next_token(data: bytes, pos: int):
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMError("malformed header: unexpected end of file")
    return data[start:pos], pos


def read_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM with ``maxval <= 255``."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise PGMError(f"unsupported: P5 only (got {magic[:2].decode(errors='replace')!r})")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PGMError(f"malformed header: {name} is {tok!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PGMError("malformed header: non-positive size")
    if not 0 < maxval <= 255:
        raise PGMError(f"unsupported maxval {maxval}: at most 255")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PGMError("malformed header: missing separator before raster")
    pos += 1
    raster = data[pos:pos + width * height]
    if len(raster) < width * height:
        raise PGMError(f"truncated payload: expected {width * height} bytes, got {len(raster)}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    if px.size and px.max() > maxval:
        raise PGMError("pixel value exceeds maxval")
    return GrayImage(px.copy())


def write_pgm(image: GrayImage, path) -> None:
    px = image.pixels if isinstance(image, GrayImage) else GrayImage(image).pixels
    header = f"P5\n{px.shape[1]} {px.shape[0]}\n255\n".encode("ascii")
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(px).tobytes())
    os.replace(tmp, path)


@dataclass(frozen=True)
class Histogram:
    """Counts per gray level; level ``i`` (1-based) holds gray value ``i - 1``."""

    counts: np.ndarray

    @property
    def n_pix(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def levels(self) -> int:
        return len(self.counts)


def histogram(image: GrayImage, levels: int = LEVELS) -> Histogram:
    px = image.pixels if isinstance(image, GrayImage) else np.asarray(image)
    return Histogram(np.bincount(px.ravel(), minlength=levels).astype(np.int64))


def _as_hist(hist):
    return hist if isinstance(hist, Histogram) else Histogram(np.asarray(hist, dtype=float))


def otsu_scores(hist, T) -> np.ndarray:
    """Between-class moment ``sum_c omega_c mu_c^2`` for each row of ``T``.

    ``T`` holds integer thresholds, shape ``(n, d)``; class ``c`` covers levels
    ``T[c-1] + 1 .. T[c]`` with ``T[-1] = 0`` and ``T[d] = L``.  Empty classes
    contribute nothing.
    """
    hist = _as_hist(hist)
    p = hist.probabilities
    L = len(p)
    P = np.concatenate([[0.0], np.cumsum(p)])
    S = np.concatenate([[0.0], np.cumsum(np.arange(1, L + 1) * p)])
    T = np.atleast_2d(np.asarray(T, dtype=np.int64))
    edges = np.concatenate([np.zeros((len(T), 1), np.int64), T,
                            np.full((len(T), 1), L, np.int64)], axis=1)
    omega = P[edges[:, 1:]] - P[edges[:, :-1]]
    mass = S[edges[:, 1:]] - S[edges[:, :-1]]
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(omega > 0, mass * mass / np.where(omega > 0, omega, 1.0), 0.0)
    return term.sum(axis=1)


def otsu_objective(hist, thresholds) -> float:
    """Otsu score of a single threshold set (to be maximised)."""
    t = np.asarray(thresholds, dtype=np.int64).reshape(1, -1)
    if t.shape[1] > 1 and np.any(np.diff(t[0]) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    return float(otsu_scores(hist, t)[0])


def repair_thresholds(X, levels: int = LEVELS) -> np.ndarray:
    """Map continuous candidates to strictly increasing integers in ``[2, L-1]``.

    Rows are sorted, rounded and clipped; collisions are pushed upward, and
    pushed back down from the top if that overflows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = X.shape[1]
    if d > levels - 2:
        raise ValueError(f"at most {levels - 2} thresholds fit in {levels} levels")
    T = np.clip(np.rint(np.sort(X, axis=1)), 2, levels - 1).astype(np.int64)
    for j in range(1, d):
        T[:, j] = np.maximum(T[:, j], T[:, j - 1] + 1)
    T[:, -1] = np.minimum(T[:, -1], levels - 1)
    for j in range(d - 2, -1, -1):
        T[:, j] = np.minimum(T[:, j], T[:, j + 1] - 1)
    return T


def exhaustive_otsu(hist, d: int = 1):
    """Best thresholds by full enumeration; practical for ``d <= 2``."""
    L = _as_hist(hist).levels
    cand = np.array(list(itertools.combinations(range(2, L), d)), dtype=np.int64)
    scores = otsu_scores(hist, cand)
    best = int(np.argmax(scores))
    return cand[best], float(scores[best])


def uniform_thresholds(d: int, levels: int = LEVELS) -> np.ndarray:
    """``floor(i * L / (d + 1))`` for ``i = 1..d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    t = (np.arange(1, d + 1) * levels) // (d + 1)
    if np.any(np.diff(t) <= 0):
        raise ValueError(f"{d} uniform thresholds do not fit in {levels} levels")
    return t.astype(np.int64)


def apply_thresholds(image: GrayImage, thresholds) -> GrayImage:
    """Replace every pixel by the rounded mean gray value of its class."""
    px = image.pixels
    t = np.asarray(thresholds, dtype=np.int64)
    level = px.astype(np.int64) + 1
    cls = np.searchsorted(t, level, side="left")
    counts = np.bincount(cls.ravel(), minlength=len(t) + 1)
    sums = np.bincount(cls.ravel(), weights=px.ravel().astype(float), minlength=len(t) + 1)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    lut = np.floor(means + 0.5).astype(np.uint8)
    return GrayImage(lut[cls])


def rmse(original: GrayImage, segmented: GrayImage) -> float:
    a = np.asarray(original.pixels, dtype=float)
    b = np.asarray(segmented.pixels, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"image sizes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(original: GrayImage, segmented: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for a perfect reconstruction."""
    e = rmse(original, segmented)
    return math.inf if e == 0 else 20.0 * math.log10(255.0 / e)


def otsu_problem(hist, d: int, levels: int = LEVELS) -> Objective:
    """Minimisation problem: negated Otsu score over continuous thresholds."""
    hist = _as_hist(hist)

    def f(X):
        return -otsu_scores(hist, repair_thresholds(X, levels))

    return Objective(name=f"otsu{d}", dim=d, func=f, lower=2.0, upper=levels - 1.0)


DEFAULT_SEGMENT_CONFIG = SolverConfig(lam=0.01, sigma=0.8, n0=100, k_max=1000, mu=0.1, n_min=10,
                                      sampler="uniform-box", record_points=False)


def segment(image: GrayImage, d: int, cfg: SolverConfig = None):
    """Pick ``d`` thresholds by maximising the Otsu score with the solver.

    Returns ``(thresholds, segmented_image, report)``.
    """
    if not 1 <= d < LEVELS - 1:
        raise ValueError(f"d must lie in [1, {LEVELS - 2}]")
    cfg = cfg or DEFAULT_SEGMENT_CONFIG
    problem = otsu_problem(histogram(image), d)
    report: RunReport = run(problem, cfg)
    t = repair_thresholds(report.final_point)[0]
    return t, apply_thresholds(image, t), report


class OtsuSegmenter(TransformerMixin, BaseEstimator):
    """Multilevel Otsu segmentation as a fit/transform estimator.

    Parameters
    ----------
    n_thresholds : int
        Number of thresholds (classes = ``n_thresholds + 1``).
    n_particles, max_iter, lam, sigma, mu, random_state
        Forwarded to the solver.

    Attributes
    ----------
    thresholds_ : ndarray of int
    score_ : float
        Otsu score at ``thresholds_``.
    report_ : RunReport
    """

    def __init__(self, n_thresholds=5, n_particles=100, max_iter=1000, lam=0.01, sigma=0.8,
                 mu=0.1, random_state=0):
        self.n_thresholds = n_thresholds
        self.n_particles = n_particles
        self.max_iter = max_iter
        self.lam = lam
        self.sigma = sigma
        self.mu = mu
        self.random_state = random_state

    def _image(self, X):
        return X if isinstance(X, GrayImage) else GrayImage(np.asarray(X))

    def fit(self, X, y=None):
        img = self._image(X)
        cfg = DEFAULT_SEGMENT_CONFIG.replace(
            n0=self.n_particles, k_max=self.max_iter, lam=self.lam, sigma=self.sigma,
            mu=self.mu, seed=int(self.random_state or 0))
        self.thresholds_, _, self.report_ = segment(img, self.n_thresholds, cfg)
        self.score_ = otsu_objective(histogram(img), self.thresholds_)
        return self

    def transform(self, X):
        check_is_fitted(self, "thresholds_")
        return apply_thresholds(self._image(X), self.thresholds_).pixels
