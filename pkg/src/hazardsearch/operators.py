"""Selection, crossover and mutation on flat gene vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genotypes import ParamLayout

MUTATION_MODES = ("offspring", "per_gene")


@dataclass(frozen=True)
class BreedingConfig:
    """Breeding hyperparameters.

    ``mutation_mode="offspring"``: ``mutation_rate`` is the chance an offspring
    is mutated; a mutated offspring changes each gene with probability
    ``1/dim`` (at least one gene). ``"per_gene"``: ``mutation_rate`` is the
    independent per-gene probability.
    """

    tournament_size: int = 2
    crossover_rate: float = 0.5
    mutation_rate: float = 1.0
    gaussian_sigma: float = 0.125
    mutation_mode: str = "offspring"

    def __post_init__(self):
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be non-negative")
        if self.mutation_mode not in MUTATION_MODES:
            raise ValueError(f"mutation_mode must be one of {MUTATION_MODES}")


def tournament_select(fitness: np.ndarray, size: int, rng: np.random.Generator) -> int:
    """Index of the lowest-fitness contestant; ties go to the earlier index."""
    contestants = rng.integers(0, len(fitness), size=size)
    best = contestants[0]
    for c in contestants[1:]:
        if fitness[c] < fitness[best] or (fitness[c] == fitness[best] and c < best):
            best = c
    return int(best)


def uniform_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, swap_prob=0.5):
    swap = rng.random(len(a)) < swap_prob
    child_a, child_b = a.copy(), b.copy()
    child_a[swap], child_b[swap] = b[swap], a[swap]
    return child_a, child_b


def mutate(v: np.ndarray, layout: ParamLayout, cfg: BreedingConfig, rng: np.random.Generator):
    """Gaussian noise on continuous genes, uniform resampling on integer and
    categorical genes."""
    dim = len(v)
    if cfg.mutation_mode == "per_gene":
        genes = rng.random(dim) < cfg.mutation_rate
    else:
        if not rng.random() < cfg.mutation_rate:
            return v
        genes = rng.random(dim) < 1.0 / dim
        if not genes.any():
            genes[rng.integers(dim)] = True
    out = v.copy()
    for d in np.flatnonzero(genes):
        p = layout.params[d]
        if p.is_categorical:
            out[d] = rng.integers(0, p.cardinality)
        elif p.integer:
            out[d] = rng.integers(int(np.ceil(p.lower)), int(np.floor(p.upper)) + 1)
        else:
            out[d] = v[d] + rng.normal(0.0, cfg.gaussian_sigma * layout.width[d])
    return out


def breed(vectors: np.ndarray, fitness: np.ndarray, n_offspring: int, layout: ParamLayout,
          repair, cfg: BreedingConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Produce ``n_offspring`` repaired children from a population."""
    children: list[np.ndarray] = []
    while len(children) < n_offspring:
        a = vectors[tournament_select(fitness, cfg.tournament_size, rng)]
        b = vectors[tournament_select(fitness, cfg.tournament_size, rng)]
        if rng.random() < cfg.crossover_rate:
            pair = uniform_crossover(a, b, rng)
        else:
            pair = (a.copy(), b.copy())
        for child in pair:
            if len(children) < n_offspring:
                children.append(repair(mutate(child, layout, cfg, rng)))
    return children
