"""Append-only archive of evaluated complete solutions."""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from .distance import DistanceMatrix, HeterogeneousDistance
from .fitness import FitnessConfig, archive_fitness
from .genotypes import CompleteSolution, SearchSpaceSpec, unflatten


class SolutionArchive:
    """Every evaluated complete solution, in evaluation order.

    Keeps a cached pairwise distance matrix and per-individual row indexes so
    the fitness of every scenario and output sequence can be looked up.
    """

    def __init__(self, space: SearchSpaceSpec, weighting: str = "count", metric=None):
        self.space = space
        self.metric = metric if metric is not None else HeterogeneousDistance(space.layout, weighting)
        self.matrix = DistanceMatrix(self.metric)
        self.keys: list[tuple] = []
        self._verdicts: list[bool] = []
        self.generation: list[int] = []
        self.fitness = np.zeros(0)
        self._by_scenario: dict[tuple, list[int]] = defaultdict(list)
        self._by_mlco: dict[tuple, list[int]] = defaultdict(list)

    def __len__(self):
        return len(self.keys)

    def __contains__(self, item) -> bool:
        key = item.key if isinstance(item, CompleteSolution) else tuple(item)
        return key in self.matrix.index_of

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __getitem__(self, i: int) -> CompleteSolution:
        fit = float(self.fitness[i]) if i < len(self.fitness) else None
        return unflatten(self.keys[i], self.space, self._verdicts[i], fit)

    @property
    def verdicts(self) -> np.ndarray:
        return np.array(self._verdicts, dtype=bool)

    @property
    def vectors(self) -> np.ndarray:
        return self.matrix.vectors

    def index(self, item) -> int:
        key = item.key if isinstance(item, CompleteSolution) else tuple(item)
        return self.matrix.index_of[key]

    def extend(self, solutions, verdicts, generation: int = 0) -> None:
        """Append evaluated solutions; duplicates are rejected."""
        keys = [s.key for s in solutions]
        if len(set(keys)) != len(keys) or any(k in self.matrix.index_of for k in keys):
            raise ValueError("archive entries must be unique")
        if len(keys) != len(verdicts):
            raise ValueError("one verdict per solution required")
        ns = self.space.n_scenario
        for key, verdict in zip(keys, verdicts):
            row = len(self.keys)
            self.keys.append(key)
            self._verdicts.append(bool(verdict))
            self.generation.append(generation)
            self._by_scenario[key[:ns]].append(row)
            self._by_mlco[key[ns:]].append(row)
        if keys:
            self.matrix.extend(np.array(keys, dtype=float), keys)

    def update_fitness(self, cfg: FitnessConfig) -> np.ndarray:
        """Recompute the boundary fitness of every entry."""
        self.fitness = archive_fitness(self.matrix.values, self.verdicts, cfg)
        return self.fitness

    def rows_with_scenario(self, values: tuple) -> list[int]:
        return self._by_scenario.get(tuple(values), [])

    def rows_with_mlco(self, values: tuple) -> list[int]:
        return self._by_mlco.get(tuple(values), [])

    def prefix(self, m: int) -> "SolutionArchive":
        """The first ``m`` entries, reusing the cached distances (no fitness)."""
        out = SolutionArchive(self.space, metric=self.metric)
        out.matrix = self.matrix.prefix(m)
        out.keys = self.keys[:m]
        out._verdicts = self._verdicts[:m]
        out.generation = self.generation[:m]
        ns = self.space.n_scenario
        for row, key in enumerate(out.keys):
            out._by_scenario[key[:ns]].append(row)
            out._by_mlco[key[ns:]].append(row)
        return out
