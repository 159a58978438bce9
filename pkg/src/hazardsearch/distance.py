"""Heterogeneous distance between gene vectors and a growable distance matrix."""
from __future__ import annotations

import numpy as np

from .genotypes import CompleteSolution, ParamLayout, SearchSpaceSpec

WEIGHTINGS = ("count", "mean")


class HeterogeneousDistance:
    """Normalised Hamming distance on categorical genes mixed with normalised
    city-block distance on numeric genes.

    With ``weighting="count"`` each gene contributes ``1/dim``, so the result is
    1 only when every categorical gene differs and every numeric gene differs
    by its full range. ``weighting="mean"`` takes the plain mean of the two
    component scores instead.

    ``pairs_evaluated`` counts every (a, b) pair computed, for instrumentation.
    """

    def __init__(self, layout: ParamLayout, weighting: str = "count"):
        if weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
        self.layout = layout
        self.weighting = weighting
        self.cat_idx = np.flatnonzero(layout.categorical)
        self.num_idx = np.flatnonzero(~layout.categorical)
        self.num_width = layout.width[self.num_idx]
        self.pairs_evaluated = 0

    @property
    def n_features(self) -> int:
        return len(self.layout)

    def pairwise(self, X, Y=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != self.n_features or Y.shape[1] != self.n_features:
            raise ValueError(
                f"vectors must have {self.n_features} genes, got {X.shape[1]} and {Y.shape[1]}"
            )
        self.pairs_evaluated += X.shape[0] * Y.shape[0]
        mismatches = np.zeros((X.shape[0], Y.shape[0]))
        for d in self.cat_idx:
            mismatches += X[:, None, d] != Y[None, :, d]
        # per-gene accumulation keeps each entry independent of batch shape
        cityblock = np.zeros((X.shape[0], Y.shape[0]))
        for d, w in zip(self.num_idx, self.num_width):
            cityblock += np.abs(X[:, None, d] - Y[None, :, d]) / w
        c, m = len(self.cat_idx), len(self.num_idx)
        if self.weighting == "count":
            return (mismatches + cityblock) / (c + m)
        if c == 0:
            return cityblock / m
        if m == 0:
            return mismatches / c
        return 0.5 * (mismatches / c) + 0.5 * (cityblock / m)

    def __call__(self, a, b) -> float:
        return float(self.pairwise(a, b)[0, 0])


def solution_metric(spec: SearchSpaceSpec, weighting: str = "count") -> HeterogeneousDistance:
    return HeterogeneousDistance(spec.layout, weighting)


def scenario_metric(spec: SearchSpaceSpec, weighting: str = "count") -> HeterogeneousDistance:
    return HeterogeneousDistance(spec.scenario_layout, weighting)


def mlco_metric(spec: SearchSpaceSpec, weighting: str = "count") -> HeterogeneousDistance:
    return HeterogeneousDistance(spec.mlco_layout, weighting)


def dist(a: CompleteSolution, b: CompleteSolution, spec: SearchSpaceSpec,
         weighting: str = "count") -> float:
    for s in (a, b):
        if len(s.key) != spec.dimensionality or not spec.layout.contains(s.key):
            raise ValueError("solution does not conform to the search space")
    return solution_metric(spec, weighting)(a.key, b.key)


class DistanceMatrix:
    """Symmetric pairwise distances over an append-only list of vectors.

    Extending the matrix only computes distances that involve the new rows;
    existing entries are never touched.
    """

    def __init__(self, metric: HeterogeneousDistance, capacity: int = 64):
        self.metric = metric
        self._data = np.zeros((capacity, capacity))
        self._vectors = np.zeros((capacity, metric.n_features))
        self.size = 0
        self.index_of: dict[tuple, int] = {}

    def __len__(self):
        return self.size

    @property
    def values(self) -> np.ndarray:
        return self._data[:self.size, :self.size]

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors[:self.size]

    def _grow(self, needed: int) -> None:
        cap = self._data.shape[0]
        if needed <= cap:
            return
        while cap < needed:
            cap *= 2
        data = np.zeros((cap, cap))
        data[:self.size, :self.size] = self.values
        vectors = np.zeros((cap, self._vectors.shape[1]))
        vectors[:self.size] = self.vectors
        self._data, self._vectors = data, vectors

    def extend(self, vectors, keys=None) -> "DistanceMatrix":
        vectors = np.asarray(vectors, dtype=float).reshape(-1, self.metric.n_features)
        if keys is None:
            keys = [tuple(v) for v in vectors]
        self._grow(self.size + len(vectors))
        for vec, key in zip(vectors, keys):
            i = self.size
            if i:
                row = self.metric.pairwise(vec[None, :], self.vectors)[0]
                self._data[i, :i] = row
                self._data[:i, i] = row
            self._vectors[i] = vec
            self.index_of[key] = i
            self.size += 1
        return self

    def prefix(self, m: int) -> "DistanceMatrix":
        """Copy of the matrix restricted to its first ``m`` rows."""
        out = DistanceMatrix(self.metric, capacity=max(m, 1))
        out._data[:m, :m] = self._data[:m, :m]
        out._vectors[:m] = self._vectors[:m]
        out.size = m
        out.index_of = {k: i for k, i in self.index_of.items() if i < m}
        return out


def extend_matrix(matrix: DistanceMatrix, new_solutions) -> DistanceMatrix:
    keys = [s.key for s in new_solutions]
    return matrix.extend(np.array(keys, dtype=float).reshape(-1, matrix.metric.n_features), keys)
