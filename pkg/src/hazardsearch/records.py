"""Provenance of one search run and its on-disk directory layout.

A run directory holds::

    config.json        method, hyperparameters, seed, search space
    generations.jsonl  one line per generation (populations, archives, counters)
    archive.jsonl      every evaluated complete solution, in evaluation order
    budget.csv         per-generation evaluation counters
    evaluations.jsonl  oracle call log (solution id, verdict, wall time, worker)
    status.json        complete / partial / failed, plus totals

Everything except ``evaluations.jsonl`` (wall times, worker names) is a
deterministic function of the configuration and seed.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import SolutionArchive
from .genotypes import SearchSpaceSpec, solution_from_json, solution_to_json

BUDGET_COLUMNS = ("generation", "new_evaluations", "oracle_calls", "evaluations")


def _dump_jsonl(rows) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in rows)


def _load_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class RunRecord:
    method: str
    params: dict
    space: dict
    seed: int | None = None
    generations: list[dict] = field(default_factory=list)
    budget: list[dict] = field(default_factory=list)
    evaluations: list[dict] = field(default_factory=list)
    archive: list[dict] = field(default_factory=list)
    status: str = "running"
    error: str | None = None

    @property
    def search_space(self) -> SearchSpaceSpec:
        return SearchSpaceSpec.from_dict(self.space)

    @property
    def n_evaluations(self) -> int:
        return len(self.archive)

    def snapshot_archive(self, archive: SolutionArchive) -> None:
        space = archive.space
        rows = []
        for i, solution in enumerate(archive):
            row = {"id": i, "generation": archive.generation[i]}
            row.update(solution_to_json(solution, space))
            rows.append(row)
        self.archive = rows

    def to_archive(self, weighting: str | None = None) -> SolutionArchive:
        """Rebuild the archive (verdicts and stored fitness) from the record."""
        space = self.search_space
        weighting = weighting or self.params.get("weighting", "count")
        archive = SolutionArchive(space, weighting)
        solutions = [solution_from_json(r, space) for r in self.archive]
        for s, r in zip(solutions, self.archive):
            archive.extend([s], [s.is_unsafe], r["generation"])
        if solutions and all(s.fitness is not None for s in solutions):
            archive.fitness = np.array([s.fitness for s in solutions], dtype=float)
        return archive

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        config = {"method": self.method, "params": self.params, "seed": self.seed, "space": self.space}
        _write(d / "config.json", json.dumps(config, sort_keys=True, indent=2) + "\n")
        _write(d / "generations.jsonl", _dump_jsonl(self.generations))
        _write(d / "archive.jsonl", _dump_jsonl(self.archive))
        _write(d / "evaluations.jsonl", _dump_jsonl(self.evaluations))
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=BUDGET_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.budget)
        _write(d / "budget.csv", buf.getvalue())
        status = {
            "status": self.status,
            "error": self.error,
            "evaluations": self.n_evaluations,
            "generations": len(self.generations),
        }
        _write(d / "status.json", json.dumps(status, sort_keys=True, indent=2) + "\n")
        return d

    @classmethod
    def load(cls, directory) -> "RunRecord":
        d = Path(directory)
        config = json.loads((d / "config.json").read_text(encoding="utf-8"))
        status = json.loads((d / "status.json").read_text(encoding="utf-8"))
        with open(d / "budget.csv", encoding="utf-8") as fh:
            budget = [{k: int(v) for k, v in row.items()} for row in csv.DictReader(fh)]
        return cls(
            method=config["method"],
            params=config["params"],
            space=config["space"],
            seed=config["seed"],
            generations=_load_jsonl(d / "generations.jsonl"),
            budget=budget,
            evaluations=_load_jsonl(d / "evaluations.jsonl"),
            archive=_load_jsonl(d / "archive.jsonl"),
            status=status["status"],
            error=status.get("error"),
        )
