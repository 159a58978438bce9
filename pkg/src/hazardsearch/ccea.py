"""Cooperative co-evolutionary search for hazard-boundary solutions.

Two populations evolve side by side: scenarios and ML-component output
sequences. Individuals are scored through the complete solutions they form
with the other population's collaborators (its population archive).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .archive import SolutionArchive
from .distance import HeterogeneousDistance
from .evaluation import Evaluator
from .fitness import FitnessConfig
from .genotypes import (
    CompleteSolution,
    MlcOutputSequence,
    Scenario,
    random_mlco,
    random_scenario,
    repair_mlco_vector,
    repair_vector,
)
from .operators import MUTATION_MODES, BreedingConfig, breed
from .oracles import OracleError, SafetyOracle
from .records import RunRecord
from .validation import check_choice, check_int, check_real, spawn_streams

logger = logging.getLogger(__name__)


@dataclass
class Population:
    members: list
    fitness: np.ndarray | None = None

    def __len__(self):
        return len(self.members)

    def vectors(self) -> np.ndarray:
        return np.array([m.values for m in self.members], dtype=float)


def _unique(solutions):
    seen, out = set(), []
    for s in solutions:
        if s.key not in seen:
            seen.add(s.key)
            out.append(s)
    return out


def collaborate(P_O: Population, P_S: Population, A_O: list, A_S: list, k: int,
                rng: np.random.Generator) -> list[CompleteSolution]:
    """Join every scenario with every output-sequence collaborator and vice
    versa, topping up with random partners until each individual has ``k``.

    Returns de-duplicated complete solutions in a deterministic order.
    """
    if not len(P_O) or not len(P_S):
        raise ValueError("populations must be non-empty")
    solutions = []

    def partners(archive, population):
        archived = {m.values for m in archive}
        pool = _unique_members(m for m in population.members if m.values not in archived)
        return list(archive), pool

    arch_o, pool_o = partners(A_O, P_O)
    for s in P_S.members:
        extra = _draw(pool_o, k - len(arch_o), rng)
        solutions.extend(CompleteSolution(s, o) for o in arch_o + extra)
    arch_s, pool_s = partners(A_S, P_S)
    for o in P_O.members:
        extra = _draw(pool_s, k - len(arch_s), rng)
        solutions.extend(CompleteSolution(s, o) for s in arch_s + extra)
    return _unique(solutions)


def _unique_members(members):
    seen, out = set(), []
    for m in members:
        if m.values not in seen:
            seen.add(m.values)
            out.append(m)
    return out


def _draw(pool, count, rng):
    count = min(max(count, 0), len(pool))
    if count == 0:
        return []
    return [pool[i] for i in rng.choice(len(pool), size=count, replace=False)]


def evaluate_new(solutions, archive: SolutionArchive, evaluator: Evaluator, generation: int) -> int:
    """Evaluate the solutions not yet archived and append them. Returns the count."""
    new = [s for s in _unique(solutions) if s not in archive]
    if new:
        verdicts = evaluator.evaluate(new, first_id=len(archive))
        archive.extend(new, verdicts, generation)
    return len(new)


def individual_fitness(population: Population, archive: SolutionArchive, scenarios: bool) -> np.ndarray:
    """Best (minimum) joint fitness among archived solutions containing each individual."""
    rows_of = archive.rows_with_scenario if scenarios else archive.rows_with_mlco
    out = np.empty(len(population))
    for i, m in enumerate(population.members):
        rows = rows_of(m.values)
        if not rows:
            raise ValueError("individual took part in no evaluated solution")
        out[i] = archive.fitness[rows].min()
    return out


def assess_fitness(P_O: Population, P_S: Population, A_O: list, A_S: list, k: int,
                   archive: SolutionArchive, evaluator: Evaluator, cfg: FitnessConfig,
                   rng: np.random.Generator, generation: int = 0):
    """Evaluate new collaborations, rescore the whole archive, then credit
    every individual with its best joint fitness.

    Returns ``(P_O, P_S, archive, n_new)``.
    """
    solutions = collaborate(P_O, P_S, A_O, A_S, k, rng)
    n_new = evaluate_new(solutions, archive, evaluator, generation)
    archive.update_fitness(cfg)
    P_O.fitness = individual_fitness(P_O, archive, scenarios=False)
    P_S.fitness = individual_fitness(P_S, archive, scenarios=True)
    return P_O, P_S, archive, n_new


def update_population_archive(P: Population, l: int, d_a: float, rng: np.random.Generator,
                              metric: HeterogeneousDistance) -> list:
    """Best individual plus randomly drawn individuals at least ``d_a`` away
    from every member already admitted, up to ``l`` members."""
    if P.fitness is None:
        raise ValueError("population has not been assessed")
    best = int(np.argmin(P.fitness))
    chosen = [best]
    vectors = P.vectors()
    remaining = [i for i in range(len(P)) if i != best]
    while len(chosen) < l and remaining:
        i = remaining.pop(int(rng.integers(len(remaining))))
        if (metric.pairwise(vectors[i], vectors[chosen])[0] >= d_a).all():
            chosen.append(i)
    return [P.members[i] for i in chosen]


def breed_population(P: Population, archive: list, n: int, layout, repair, cfg: BreedingConfig,
                     rng: np.random.Generator, factory) -> Population:
    """``n - len(archive)`` offspring followed by the archive members unchanged."""
    children = breed(P.vectors(), P.fitness, n - len(archive), layout, repair, cfg, rng)
    members = [factory(layout.coerce(c)) for c in children] + list(archive)
    return Population(members)


def post_process_indices(archive: SolutionArchive, d_th: float, t_b: float,
                         fitness: np.ndarray | None = None) -> list[int]:
    fitness = archive.fitness if fitness is None else fitness
    if len(fitness) != len(archive):
        raise ValueError("every archive entry needs a fitness value")
    D = archive.matrix.values
    admitted: list[int] = []
    for i in np.argsort(fitness, kind="stable"):
        if not fitness[i] < t_b:
            break
        if not admitted or (D[i, admitted] > d_th).all():
            admitted.append(int(i))
    return admitted


def post_process(archive: SolutionArchive, d_th: float, t_b: float) -> list[CompleteSolution]:
    """Greedy pick, in ascending fitness order, of entries with fitness below
    ``t_b`` that lie more than ``d_th`` from every entry already picked."""
    return [archive[i] for i in post_process_indices(archive, d_th, t_b)]


class BaseSearch(BaseEstimator):
    """Shared plumbing for the boundary searches.

    Subclasses implement ``_search`` and take hyperparameters as constructor
    arguments, sklearn style. ``fit(oracle)`` runs the search; results land in
    ``archive_``, ``boundary_set_`` and ``run_record_``.
    """

    method = "base"

    def _fitness_config(self) -> FitnessConfig:
        return FitnessConfig(self.delta, self.p_th, self.z)

    def _validate_common(self):
        check_real("delta", self.delta, 0, 1, low_open=True)
        check_real("p_th", self.p_th, 0, 1, low_open=True, high_open=True)
        check_real("z", self.z, 0, low_open=True)
        check_real("d_th", self.d_th, 0)
        check_real("t_b", self.t_b, 0)
        check_choice("weighting", self.weighting, ("count", "mean"))
        check_int("workers", self.workers, 1)
        check_int("max_generations", self.max_generations, 1, allow_none=True)
        check_int("max_stale_generations", self.max_stale_generations, 1, allow_none=True)

    def _validate_params(self):
        self._validate_common()

    def fit(self, oracle: SafetyOracle, verdict_cache: dict | None = None):
        """Run the search against ``oracle`` (whose ``space`` defines the genotypes).

        ``verdict_cache`` maps solution keys to verdicts already known, e.g.
        from an interrupted run; those solutions are not sent to the oracle.
        """
        self._validate_params()
        space = oracle.space
        self.space_ = space
        self.archive_ = SolutionArchive(space, self.weighting)
        self.evaluator_ = Evaluator(oracle, self.workers, cache=verdict_cache)
        params = self.get_params()
        if isinstance(params["random_state"], np.random.Generator):
            params["random_state"] = None
        self.run_record_ = RunRecord(self.method, params, space.to_dict(), params["random_state"])
        self.n_generations_ = 0
        try:
            self._search(space)
        except OracleError as exc:
            self._close_record("failed", str(exc))
            raise
        except KeyboardInterrupt:
            self._close_record("partial", "interrupted")
            raise
        self.boundary_set_ = post_process(self.archive_, self.d_th, self.t_b)
        self._close_record("complete")
        return self

    def _close_record(self, status, error=None):
        rec = self.run_record_
        rec.status, rec.error = status, error
        rec.snapshot_archive(self.archive_)
        rec.evaluations = [e.to_dict() for e in self.evaluator_.log]
        self.n_evaluations_ = len(self.archive_)
        self.oracle_calls_ = self.evaluator_.oracle_calls

    def _log_budget(self, generation, n_new):
        self.run_record_.budget.append({
            "generation": generation,
            "new_evaluations": n_new,
            "oracle_calls": self.evaluator_.oracle_calls,
            "evaluations": len(self.archive_),
        })

    def _should_stop(self, generation, stale) -> bool:
        if len(self.archive_) >= self.budget:
            return True
        if self.max_generations is not None and generation + 1 >= self.max_generations:
            return True
        if self.max_stale_generations is not None and stale >= self.max_stale_generations:
            logger.info("%s: no new solutions for %d generations, stopping", self.method, stale)
            return True
        return False

    def dbs(self, d_th=None, t_b=None) -> int:
        """Number of distinct boundary solutions in the fitted archive."""
        check_is_fitted(self, "archive_")
        d_th = self.d_th if d_th is None else d_th
        t_b = self.t_b if t_b is None else t_b
        return len(post_process_indices(self.archive_, d_th, t_b))

    def _search(self, space):
        raise NotImplementedError


def _values(members):
    return [list(m.values) for m in members]


class MLCSHE(BaseSearch):
    """Cooperative co-evolutionary hazard-boundary search.

    Parameters
    ----------
    n : int
        Size of each population.
    k : int
        Minimum number of collaborations per individual.
    p_th : float
        Threshold probability of a probabilistic unsafe region.
    d_a : float
        Minimum distance between population-archive members.
    l : int
        Maximum population-archive size.
    d_th, t_b : float
        Distance and fitness thresholds used to pick ``boundary_set_``.
    delta, z : float
        Neighbourhood radius and normal quantile of the fitness function.
    budget : int
        Number of evaluated complete solutions; checked once per generation.
    tournament_size, crossover_rate, mutation_rate, gaussian_sigma, mutation_mode
        Breeding settings, see :class:`~hazardsearch.operators.BreedingConfig`.
    weighting : {"count", "mean"}
        Mixing rule of the heterogeneous distance.
    workers : int
        Concurrent oracle evaluations.
    max_generations, max_stale_generations : int or None
        Extra stopping rules; the latter stops after that many consecutive
        generations without a new solution.
    random_state : int, Generator or None
    """

    method = "mlcshe"

    def __init__(self, n=10, k=2, p_th=0.1, d_a=0.4, l=3, d_th=0.2, t_b=0.15, delta=0.25,
                 z=1.96, budget=1300, tournament_size=2, crossover_rate=0.5, mutation_rate=1.0,
                 gaussian_sigma=0.125, mutation_mode="offspring", weighting="count", workers=1,
                 max_generations=None, max_stale_generations=50, random_state=None):
        self.n = n
        self.k = k
        self.p_th = p_th
        self.d_a = d_a
        self.l = l
        self.d_th = d_th
        self.t_b = t_b
        self.delta = delta
        self.z = z
        self.budget = budget
        self.tournament_size = tournament_size
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.gaussian_sigma = gaussian_sigma
        self.mutation_mode = mutation_mode
        self.weighting = weighting
        self.workers = workers
        self.max_generations = max_generations
        self.max_stale_generations = max_stale_generations
        self.random_state = random_state

    def _validate_params(self):
        self._validate_common()
        check_int("n", self.n, 2)
        check_int("k", self.k, 1)
        check_int("l", self.l, 1)
        check_int("budget", self.budget, 1)
        check_real("d_a", self.d_a, 0)
        check_choice("mutation_mode", self.mutation_mode, MUTATION_MODES)
        self._breeding_config()

    def _breeding_config(self) -> BreedingConfig:
        return BreedingConfig(self.tournament_size, self.crossover_rate, self.mutation_rate,
                              self.gaussian_sigma, self.mutation_mode)

    def _search(self, space):
        streams = spawn_streams(self.random_state)
        cfg = self._fitness_config()
        breeding = self._breeding_config()
        metric_s = HeterogeneousDistance(space.scenario_layout, self.weighting)
        metric_o = HeterogeneousDistance(space.mlco_layout, self.weighting)

        P_S = Population([random_scenario(space, streams["init"]) for _ in range(self.n)])
        P_O = Population([random_mlco(space, streams["init"]) for _ in range(self.n)])
        A_S, A_O = list(P_S.members), list(P_O.members)

        generation, stale = 0, 0
        while True:
            P_O, P_S, _, n_new = assess_fitness(P_O, P_S, A_O, A_S, self.k, self.archive_,
                                                self.evaluator_, cfg, streams["collaborate"],
                                                generation)
            stale = 0 if n_new else stale + 1
            self._log_budget(generation, n_new)
            entry = {
                "generation": generation,
                "scenarios": _values(P_S.members),
                "scenario_fitness": P_S.fitness.tolist(),
                "mlcos": _values(P_O.members),
                "mlco_fitness": P_O.fitness.tolist(),
                "collaborators_scenario": _values(A_S),
                "collaborators_mlco": _values(A_O),
                "new_evaluations": n_new,
                "evaluations": len(self.archive_),
            }
            self.run_record_.generations.append(entry)
            self.n_generations_ = generation + 1
            if self._should_stop(generation, stale):
                break
            A_O = update_population_archive(P_O, self.l, self.d_a, streams["archive"], metric_o)
            A_S = update_population_archive(P_S, self.l, self.d_a, streams["archive"], metric_s)
            entry["archive_scenario"] = _values(A_S)
            entry["archive_mlco"] = _values(A_O)
            P_O = breed_population(P_O, A_O, self.n, space.mlco_layout,
                                   lambda v: repair_mlco_vector(v, space), breeding,
                                   streams["breed_mlco"], MlcOutputSequence)
            P_S = breed_population(P_S, A_S, self.n, space.scenario_layout,
                                   lambda v: repair_vector(v, space.scenario_layout), breeding,
                                   streams["breed_scenario"], Scenario)
            generation += 1
        self.populations_ = (P_S, P_O)
        self.population_archives_ = (A_S, A_O)
