"""Batch oracle evaluation with an optional thread pool and a call log."""
from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .genotypes import CompleteSolution
from .oracles import OracleError, SafetyOracle


@dataclass
class EvaluationLogEntry:
    solution_id: int
    is_unsafe: bool
    wall_time: float
    worker: str

    def to_dict(self) -> dict:
        return asdict(self)


class Evaluator:
    """Evaluates batches of solutions, preserving batch order in the results.

    ``cache`` maps solution keys to known verdicts (e.g. from an interrupted
    run); cached solutions are logged with worker ``"cache"`` and never reach
    the oracle.
    """

    def __init__(self, oracle: SafetyOracle, workers: int = 1, cache: dict | None = None):
        self.oracle = oracle
        self.workers = max(1, int(workers))
        self.cache = dict(cache or {})
        self.log: list[EvaluationLogEntry] = []
        self.oracle_calls = 0

    def _one(self, solution: CompleteSolution):
        start = time.perf_counter()
        verdict = self.oracle.evaluate(solution)
        if not isinstance(verdict, (bool, int, np.bool_)) or verdict not in (0, 1):
            raise OracleError(f"oracle returned non-boolean verdict {verdict!r}")
        return bool(verdict), time.perf_counter() - start, threading.current_thread().name

    def evaluate(self, solutions: list[CompleteSolution], first_id: int) -> list[bool]:
        todo = [s for s in solutions if s.key not in self.cache]
        if self.workers == 1 or len(todo) <= 1:
            results = [self._one(s) for s in todo]
        else:
            with ThreadPoolExecutor(self.workers, thread_name_prefix="worker") as pool:
                results = list(pool.map(self._one, todo))
        fresh = {s.key: r for s, r in zip(todo, results)}
        self.oracle_calls += len(todo)
        verdicts = []
        for offset, s in enumerate(solutions):
            if s.key in fresh:
                verdict, wall, worker = fresh[s.key]
            else:
                verdict, wall, worker = self.cache[s.key], 0.0, "cache"
            self.log.append(EvaluationLogEntry(first_id + offset, verdict, wall, worker))
            verdicts.append(verdict)
        return verdicts
