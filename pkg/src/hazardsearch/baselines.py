"""Baseline searches over complete solutions: random search and a plain GA.

Both share the archive, fitness, budget accounting and post-processing of
:class:`~hazardsearch.ccea.MLCSHE`.
"""
from __future__ import annotations

import numpy as np

from .ccea import BaseSearch, evaluate_new
from .genotypes import random_solution, repair_joint_vector, unflatten
from .operators import MUTATION_MODES, BreedingConfig, breed
from .validation import check_choice, check_int, spawn_streams


class RandomSearch(BaseSearch):
    """Uniform sampling of complete solutions.

    Fitness is computed once, over the whole archive, after all evaluations.
    """

    method = "rs"

    def __init__(self, budget=1300, p_th=0.1, d_th=0.2, t_b=0.15, delta=0.25, z=1.96,
                 weighting="count", workers=1, random_state=None):
        self.budget = budget
        self.p_th = p_th
        self.d_th = d_th
        self.t_b = t_b
        self.delta = delta
        self.z = z
        self.weighting = weighting
        self.workers = workers
        self.random_state = random_state

    max_generations = None
    max_stale_generations = None

    def _validate_params(self):
        self._validate_common()
        check_int("budget", self.budget, 0)

    def _search(self, space):
        rng = spawn_streams(self.random_state)["init"]
        samples = [random_solution(space, rng) for _ in range(self.budget)]
        n_new = evaluate_new(samples, self.archive_, self.evaluator_, 0)
        self.archive_.update_fitness(self._fitness_config())
        self._log_budget(0, n_new)
        self.run_record_.generations.append(
            {"generation": 0, "new_evaluations": n_new, "evaluations": len(self.archive_)}
        )
        self.n_generations_ = 1


class GeneticSearch(BaseSearch):
    """Single-population GA over flattened complete solutions.

    Parameters
    ----------
    population_size, mutation_rate, crossover_rate, tournament_size : see BreedingConfig
    mutation_mode : {"per_gene", "offspring"}
        ``"per_gene"`` (default) treats ``mutation_rate`` as the per-gene rate.
    elitism : int
        Best members copied unchanged into the next generation.
    Other parameters as in :class:`~hazardsearch.ccea.MLCSHE`.
    """

    method = "ga"

    def __init__(self, population_size=60, mutation_rate=0.01, crossover_rate=0.85,
                 tournament_size=2, gaussian_sigma=0.125, mutation_mode="per_gene", elitism=1,
                 budget=1300, p_th=0.1, d_th=0.2, t_b=0.15, delta=0.25, z=1.96,
                 weighting="count", workers=1, max_generations=None, max_stale_generations=50,
                 random_state=None):
        self.population_size = population_size
        self.mutation_rate = mutation_rate
        self.crossover_rate = crossover_rate
        self.tournament_size = tournament_size
        self.gaussian_sigma = gaussian_sigma
        self.mutation_mode = mutation_mode
        self.elitism = elitism
        self.budget = budget
        self.p_th = p_th
        self.d_th = d_th
        self.t_b = t_b
        self.delta = delta
        self.z = z
        self.weighting = weighting
        self.workers = workers
        self.max_generations = max_generations
        self.max_stale_generations = max_stale_generations
        self.random_state = random_state

    def _validate_params(self):
        self._validate_common()
        check_int("population_size", self.population_size, 2)
        check_int("budget", self.budget, 1)
        check_int("elitism", self.elitism, 0)
        check_choice("mutation_mode", self.mutation_mode, MUTATION_MODES)
        if self.elitism >= self.population_size:
            raise ValueError("elitism must be smaller than population_size")
        self._breeding_config()

    def _breeding_config(self) -> BreedingConfig:
        return BreedingConfig(self.tournament_size, self.crossover_rate, self.mutation_rate,
                              self.gaussian_sigma, self.mutation_mode)

    def _search(self, space):
        streams = spawn_streams(self.random_state, ("init", "breed"))
        cfg = self._fitness_config()
        breeding = self._breeding_config()
        layout = space.layout
        population = [random_solution(space, streams["init"]) for _ in range(self.population_size)]

        generation, stale = 0, 0
        while True:
            n_new = evaluate_new(population, self.archive_, self.evaluator_, generation)
            stale = 0 if n_new else stale + 1
            self.archive_.update_fitness(cfg)
            fitness = self.archive_.fitness[[self.archive_.index(s) for s in population]]
            self._log_budget(generation, n_new)
            self.run_record_.generations.append({
                "generation": generation,
                "population": [list(s.key) for s in population],
                "fitness": fitness.tolist(),
                "new_evaluations": n_new,
                "evaluations": len(self.archive_),
            })
            self.n_generations_ = generation + 1
            if self._should_stop(generation, stale):
                break
            vectors = np.array([s.key for s in population], dtype=float)
            elite = np.argsort(fitness, kind="stable")[:self.elitism]
            children = breed(vectors, fitness, self.population_size - self.elitism, layout,
                             lambda v: repair_joint_vector(v, space), breeding, streams["breed"])
            population = [unflatten(c, space) for c in children] + [population[i] for i in elite]
            generation += 1
        self.population_ = population
