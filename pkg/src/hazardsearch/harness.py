"""Seeded repeat orchestration and result post-processing.

Results layout under an output directory::

    manifest.json
    <method>/repeat_000/   one RunRecord directory per repeat
    dbs_table.csv          written by postprocess
    progress.csv
    stats.csv
    plot_dbs_vs_dth.csv    written by export_plotdata
    plot_dbs_vs_budget.csv
"""
from __future__ import annotations

import csv
import io
import json
import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis
from .config import ConfigError, ExperimentConfig
from .genotypes import solution_from_json
from .oracles import OracleError
from .records import RunRecord, _write

logger = logging.getLogger(__name__)

DBS_COLUMNS = ("method", "d_th", "t_b", "mean", "ci_half", "values")
PROGRESS_COLUMNS = ("method", "d_th", "t_b", "fraction", "mean", "ci_half")
STATS_COLUMNS = ("A", "B", "d_th", "t_b", "p", "a12")
PLOT_DTH_COLUMNS = ("method", "t_b", "d_th", "mean", "ci_low", "ci_high")
PLOT_BUDGET_COLUMNS = ("method", "d_th", "t_b", "fraction", "mean", "ci_low", "ci_high")


class ResultsError(ValueError):
    """Results directory content is missing or unusable."""


def repeat_dir(root: Path, method: str, repeat: int) -> Path:
    return Path(root) / method / f"repeat_{repeat:03d}"


def _comparable(params: dict) -> dict:
    return {k: v for k, v in params.items() if k != "workers"}


def _existing(d: Path):
    if not (d / "status.json").exists() or not (d / "config.json").exists():
        return None, None
    return (json.loads((d / "status.json").read_text(encoding="utf-8")),
            json.loads((d / "config.json").read_text(encoding="utf-8")))


def _verdict_cache(d: Path, space) -> dict:
    path = d / "archive.jsonl"
    if not path.exists():
        return {}
    cache = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                s = solution_from_json(json.loads(line), space)
                cache[s.key] = bool(s.is_unsafe)
    return cache


def run_repeat(cfg: ExperimentConfig | dict, repeat: int, root) -> dict:
    """Run (or resume) one repeat and persist its RunRecord."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    root = Path(root)
    d = repeat_dir(root, cfg.method, repeat)
    est = cfg.estimator(repeat)
    space = cfg.search_space()
    status, stored = _existing(d)
    entry = {"repeat": repeat, "seed": cfg.seed(repeat),
             "path": str(d.relative_to(root).as_posix())}
    if stored is not None:
        same = (stored["method"] == cfg.method and stored["seed"] == cfg.seed(repeat)
                and stored["space"] == space.to_dict()
                and _comparable(stored["params"]) == _comparable(est.get_params()))
        if not same:
            raise ConfigError("output_dir", f"{d} holds a run with a different configuration")
        if status["status"] == "complete":
            logger.info("repeat %d already complete, skipping", repeat)
            return {**entry, "status": "complete", "evaluations": status["evaluations"],
                    "oracle_calls": 0}
    cache = _verdict_cache(d, space)
    if cache:
        logger.info("repeat %d: resuming with %d known verdicts", repeat, len(cache))
    oracle = cfg.build_oracle(space)
    try:
        with oracle:
            est.fit(oracle, verdict_cache=cache)
    except OracleError as exc:
        est.run_record_.save(d)
        logger.error("repeat %d failed: %s", repeat, exc)
        return {**entry, "status": "failed", "error": str(exc),
                "evaluations": est.n_evaluations_, "oracle_calls": est.oracle_calls_}
    except KeyboardInterrupt:
        est.run_record_.save(d)
        raise
    est.run_record_.save(d)
    return {**entry, "status": "complete", "evaluations": est.n_evaluations_,
            "oracle_calls": est.oracle_calls_}


def _write_manifest(root: Path, cfg: ExperimentConfig, results: list[dict]) -> None:
    path = root / "manifest.json"
    manifest = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    keep = ("repeat", "seed", "path", "status", "evaluations", "error")
    manifest[cfg.method] = {
        "config": cfg.to_dict(),
        "repeats": [{k: r[k] for k in keep if k in r} for r in sorted(results, key=lambda r: r["repeat"])],
    }
    _write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, root=None, jobs: int | None = None) -> list[dict]:
    """Run every repeat of ``cfg``; returns one status entry per repeat."""
    root = Path(root) if root is not None else cfg.output_path()
    root.mkdir(parents=True, exist_ok=True)
    jobs = cfg.jobs if jobs is None else jobs
    if jobs > 1 and cfg.repeats > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(min(jobs, cfg.repeats), mp_context=ctx) as pool:
            futures = [pool.submit(run_repeat, cfg.to_dict(), i, root) for i in range(cfg.repeats)]
            results = [f.result() for f in futures]
    else:
        results = [run_repeat(cfg, i, root) for i in range(cfg.repeats)]
    _write_manifest(root, cfg, results)
    return results


# post-processing -----------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _read_csv(path: Path) -> list[dict]:
    if not path.exists():
        raise ResultsError(f"{path} not found; run postprocess first")
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_runs(root) -> dict[str, list[tuple[Path, RunRecord]]]:
    """All RunRecords under ``root`` grouped by method, in repeat order."""
    root = Path(root)
    if not root.is_dir():
        raise ResultsError(f"results directory {root} does not exist")
    runs: dict[str, list] = {}
    for cfg_path in sorted(root.glob("*/repeat_*/config.json")):
        d = cfg_path.parent
        try:
            rec = RunRecord.load(d)
        except (OSError, ValueError, KeyError) as exc:
            raise ResultsError(f"cannot load run {d}: {exc}") from None
        runs.setdefault(rec.method, []).append((d, rec))
    if not runs:
        raise ResultsError(f"no runs found under {root}")
    return runs


def postprocess(root, d_ths=analysis.D_TH_GRID, t_bs=analysis.T_B_GRID,
                checkpoints=analysis.CHECKPOINTS) -> dict[str, Path]:
    """Write the DBS table, progress curves and pairwise statistics CSVs."""
    root = Path(root)
    runs = load_runs(root)
    missing = [str(d) for recs in runs.values() for d, rec in recs
               if any(row.get("fitness") is None for row in rec.archive)]
    if missing:
        raise ResultsError("runs without fitness on every archive entry: " + ", ".join(missing))
    archives = {m: [rec.to_archive() for _, rec in recs] for m, recs in runs.items()}
    table = analysis.dbs_table(archives, d_ths, t_bs)
    dbs_rows = [{**r, "values": ";".join(str(v) for v in r["values"])} for r in table]

    progress_rows = []
    for method in sorted(runs):
        curves = [analysis.progress_table(rec, d_ths, t_bs, checkpoints, archive=a)
                  for (_, rec), a in zip(runs[method], archives[method])]
        for d in d_ths:
            for t in t_bs:
                for j, fraction in enumerate(checkpoints):
                    mean, half = analysis.mean_ci([c[(d, t)][j][1] for c in curves])
                    progress_rows.append({"method": method, "d_th": d, "t_b": t,
                                          "fraction": fraction, "mean": mean, "ci_half": half})
    stats_rows = analysis.pairwise_stats(table)

    out = {"dbs_table": root / "dbs_table.csv", "progress": root / "progress.csv",
           "stats": root / "stats.csv"}
    _write(out["dbs_table"], _csv(DBS_COLUMNS, dbs_rows))
    _write(out["progress"], _csv(PROGRESS_COLUMNS, progress_rows))
    _write(out["stats"], _csv(STATS_COLUMNS, stats_rows))
    return out


def export_plotdata(root) -> dict[str, Path]:
    """Long-format plotting data derived from the postprocess outputs."""
    root = Path(root)
    table = _read_csv(root / "dbs_table.csv")
    progress = _read_csv(root / "progress.csv")

    def band(row):
        mean, half = float(row["mean"]), float(row["ci_half"])
        return {"mean": mean, "ci_low": mean - half, "ci_high": mean + half}

    dth_rows = sorted(
        ({"method": r["method"], "t_b": float(r["t_b"]), "d_th": float(r["d_th"]), **band(r)}
         for r in table),
        key=lambda r: (r["method"], r["t_b"], r["d_th"]),
    )
    budget_rows = [{"method": r["method"], "d_th": float(r["d_th"]), "t_b": float(r["t_b"]),
                    "fraction": float(r["fraction"]), **band(r)} for r in progress]
    out = {"dbs_vs_dth": root / "plot_dbs_vs_dth.csv",
           "dbs_vs_budget": root / "plot_dbs_vs_budget.csv"}
    _write(out["dbs_vs_dth"], _csv(PLOT_DTH_COLUMNS, dth_rows))
    _write(out["dbs_vs_budget"], _csv(PLOT_BUDGET_COLUMNS, budget_rows))
    return out
