"""Boundary-seeking fitness from neighbourhood unsafe proportions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .distance import HeterogeneousDistance
from .validation import check_verdicts, check_vectors


@dataclass(frozen=True)
class FitnessConfig:
    delta: float = 0.25
    p_th: float = 0.1
    z: float = 1.96

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must be in (0, 1]")
        if not 0 < self.p_th < 1:
            raise ValueError("p_th must be in (0, 1)")
        if not self.z > 0:
            raise ValueError("z must be positive")


@dataclass(frozen=True)
class NeighborhoodStats:
    evaluated: int
    unsafe: int

    def __post_init__(self):
        if self.evaluated < 0 or not 0 <= self.unsafe <= self.evaluated:
            raise ValueError("need 0 <= unsafe <= evaluated")


def neighborhood_stats(x, archive, delta: float, matrix=None) -> NeighborhoodStats:
    """Count archive members within ``delta`` of ``x`` (``x`` included)."""
    matrix = archive.matrix if matrix is None else matrix
    key = x.key if hasattr(x, "key") else tuple(x)
    i = matrix.index_of[key]
    inside = matrix.values[i] <= delta
    return NeighborhoodStats(int(inside.sum()), int(archive.verdicts[inside].sum()))


def estimate_p(stats: NeighborhoodStats) -> float:
    if stats.evaluated < 1:
        raise ValueError("neighbourhood has no evaluated inputs")
    return stats.unsafe / stats.evaluated


def wilson_interval(evaluated, unsafe, z: float = 1.96):
    """Vectorised Wilson score interval, clamped to [0, 1]."""
    n = np.asarray(evaluated, dtype=float)
    u = np.asarray(unsafe, dtype=float)
    if np.any(n < 1):
        raise ValueError("neighbourhood has no evaluated inputs")
    p = u / n
    gamma = z * z / n
    center = (p + gamma / 2) / (1 + gamma)
    half = z / (1 + gamma) * np.sqrt(p * (1 - p) / n + gamma / (4 * n))
    lower = np.clip(center - half, 0.0, 1.0)
    upper = np.clip(center + half, 0.0, 1.0)
    # the closed form is exactly 0 / 1 at these extremes; rounding is not
    lower = np.where(u == 0, 0.0, lower)
    upper = np.where(u == n, 1.0, upper)
    return lower, upper


def wilson_ci(stats: NeighborhoodStats, z: float = 1.96) -> tuple[float, float]:
    lower, upper = wilson_interval(stats.evaluated, stats.unsafe, z)
    return float(lower), float(upper)


def fitness_from_interval(lower, upper, p_th: float):
    """Normalised worst-case gap between the interval limits and ``p_th``."""
    diff = np.maximum(np.abs(np.asarray(upper) - p_th), np.abs(np.asarray(lower) - p_th))
    return diff / max(p_th, 1 - p_th)


def fitness_from_counts(evaluated, unsafe, cfg: FitnessConfig) -> np.ndarray:
    lower, upper = wilson_interval(evaluated, unsafe, cfg.z)
    return fitness_from_interval(lower, upper, cfg.p_th)


def boundary_fitness(x, archive, cfg: FitnessConfig, matrix=None) -> float:
    stats = neighborhood_stats(x, archive, cfg.delta, matrix)
    return float(fitness_from_counts(stats.evaluated, stats.unsafe, cfg))


def archive_fitness(distances: np.ndarray, verdicts: np.ndarray, cfg: FitnessConfig) -> np.ndarray:
    """Fitness of every row of a square distance matrix."""
    if len(verdicts) == 0:
        return np.zeros(0)
    inside = distances <= cfg.delta
    evaluated = inside.sum(axis=1)
    unsafe = inside @ verdicts.astype(np.int64)
    return fitness_from_counts(evaluated, unsafe, cfg)


class BoundaryFitness(TransformerMixin, BaseEstimator):
    """Score gene vectors by their closeness to the hazard boundary.

    ``fit`` stores evaluated vectors and their unsafe verdicts; ``transform``
    returns the boundary fitness of each query vector, counting fitted points
    within ``delta``. A query with no fitted neighbour gets fitness 1.

    Parameters
    ----------
    space : SearchSpaceSpec
    delta, p_th, z : float
        Neighbourhood radius, threshold probability and normal quantile.
    weighting : {"count", "mean"}
        Mixing rule of the heterogeneous distance.
    """

    def __init__(self, space=None, delta=0.25, p_th=0.1, z=1.96, weighting="count"):
        self.space = space
        self.delta = delta
        self.p_th = p_th
        self.z = z
        self.weighting = weighting

    def fit(self, X, y):
        if self.space is None:
            raise ValueError("space is required")
        X = check_vectors(X, self.space)
        y = check_verdicts(y, len(X))
        self.config_ = FitnessConfig(self.delta, self.p_th, self.z)
        self.metric_ = HeterogeneousDistance(self.space.layout, self.weighting)
        self.X_ = X
        self.y_ = y
        self.n_features_in_ = X.shape[1]
        self.fitness_ = archive_fitness(self.metric_.pairwise(X), y, self.config_)
        return self

    def score_samples(self, X) -> np.ndarray:
        check_is_fitted(self, "fitness_")
        X = check_vectors(X, self.space)
        if len(self.X_) == 0:
            return np.ones(len(X))
        inside = self.metric_.pairwise(X, self.X_) <= self.config_.delta
        evaluated = inside.sum(axis=1)
        unsafe = inside @ self.y_.astype(np.int64)
        out = np.ones(len(X))
        seen = evaluated > 0
        if seen.any():
            out[seen] = fitness_from_counts(evaluated[seen], unsafe[seen], self.config_)
        return out

    def transform(self, X):
        return self.score_samples(X)[:, None]

