"""Effectiveness and efficiency metrics over completed runs, and the
statistics used to compare search methods."""
from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .archive import SolutionArchive
from .ccea import post_process_indices
from .fitness import FitnessConfig, archive_fitness
from .records import RunRecord

D_TH_GRID = (0.1, 0.2, 0.3)
T_B_GRID = (0.01, 0.03, 0.05, 0.10, 0.15, 0.20)
CHECKPOINTS = tuple(round(0.1 * i, 1) for i in range(1, 11))


def dbs(archive: SolutionArchive, d_th: float, t_b: float) -> int:
    """Distinct boundary solutions: size of the post-processed archive."""
    if len(archive) == 0:
        return 0
    return len(post_process_indices(archive, d_th, t_b))


def _fitness_config(params: dict) -> FitnessConfig:
    return FitnessConfig(params.get("delta", 0.25), params.get("p_th", 0.1), params.get("z", 1.96))


def prefix_fitness(archive: SolutionArchive, m: int, cfg: FitnessConfig) -> np.ndarray:
    """Fitness of the first ``m`` entries computed as if only they existed."""
    return archive_fitness(archive.matrix.values[:m, :m], archive.verdicts[:m], cfg)


def progress_curve(run: RunRecord, d_th: float, t_b: float,
                   checkpoints: Sequence[float] = CHECKPOINTS, archive=None) -> list[tuple[float, int]]:
    """DBS after each fraction of the run's budget has been spent."""
    return progress_table(run, [d_th], [t_b], checkpoints, archive)[(d_th, t_b)]


def progress_table(run: RunRecord, d_ths: Iterable[float], t_bs: Iterable[float],
                   checkpoints: Sequence[float] = CHECKPOINTS, archive=None) -> dict:
    """``{(d_th, t_b): [(fraction, DBS), ...]}`` for one run."""
    archive = archive if archive is not None else run.to_archive()
    cfg = _fitness_config(run.params)
    budget = run.params["budget"]
    d_ths, t_bs = list(d_ths), list(t_bs)
    out = {(d, t): [] for d in d_ths for t in t_bs}
    for fraction in checkpoints:
        m = min(int(math.floor(fraction * budget + 1e-9)), len(archive))
        if m == 0:
            for cell in out.values():
                cell.append((fraction, 0))
            continue
        sub = archive.prefix(m)
        sub.fitness = prefix_fitness(archive, m, cfg)
        for d in d_ths:
            for t in t_bs:
                out[(d, t)].append((fraction, dbs(sub, d, t)))
    return out


def _exact_rank_sum_counts(doubled_ranks: Sequence[int], n1: int) -> dict[int, int]:
    """Number of size-``n1`` subsets for every achievable sum of doubled ranks."""
    table = [dict() for _ in range(n1 + 1)]
    table[0][0] = 1
    for r in doubled_ranks:
        for j in range(n1, 0, -1):
            prev = table[j - 1]
            cur = table[j]
            for s, c in prev.items():
                cur[s + r] = cur.get(s + r, 0) + c
    return table[n1]


def mann_whitney_u(a: Sequence[float], b: Sequence[float], method: str = "auto") -> float:
    """Two-sided p-value of the Mann-Whitney U (rank-sum) test.

    ``method="auto"`` uses the exact permutation distribution (ties handled
    through mid-ranks) when both samples have fewer than 8 values, otherwise
    the tie-corrected normal approximation with continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if method == "auto":
        method = "exact" if max(n1, n2) < 8 else "asymptotic"
    pooled = np.concatenate([a, b])
    ranks = stats.rankdata(pooled)
    N = n1 + n2
    if method == "exact":
        doubled = [int(round(2 * r)) for r in ranks]
        observed = sum(doubled[:n1])
        centre = n1 * (N + 1)
        dev = abs(observed - centre)
        counts = _exact_rank_sum_counts(doubled, n1)
        extreme = sum(c for s, c in counts.items() if abs(s - centre) >= dev)
        return min(1.0, extreme / math.comb(N, n1))
    if method != "asymptotic":
        raise ValueError(f"unknown method {method!r}")
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2
    mu = n1 * n2 / 2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts**3 - tie_counts).sum()) / (N * (N - 1))
    var = n1 * n2 / 12 * ((N + 1) - tie_term)
    if var <= 0:
        return 1.0
    zval = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(zval / math.sqrt(2)))


def vargha_delaney(a: Sequence[float], b: Sequence[float]) -> float:
    """Probability that a value from ``a`` beats one from ``b`` (ties count half)."""
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[None, :]
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    greater = (a > b).sum()
    equal = (a == b).sum()
    return float((greater + 0.5 * equal) / (a.size * b.size))


def mean_ci(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float]:
    """Mean and t-distribution half-width of its confidence interval."""
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return float("nan"), float("nan")
    mean = float(x.mean())
    if len(x) < 2:
        return mean, 0.0
    sem = float(x.std(ddof=1)) / math.sqrt(len(x))
    return mean, float(stats.t.ppf(0.5 + confidence / 2, len(x) - 1) * sem)


def dbs_table(runs: dict[str, list[SolutionArchive]], d_ths=D_TH_GRID, t_bs=T_B_GRID) -> list[dict]:
    """One row per (method, d_th, t_b) with per-repeat DBS values."""
    rows = []
    for method in sorted(runs):
        for d in d_ths:
            for t in t_bs:
                values = [dbs(a, d, t) for a in runs[method]]
                mean, half = mean_ci(values)
                rows.append({"method": method, "d_th": d, "t_b": t, "mean": mean,
                             "ci_half": half, "values": values})
    return rows


def pairwise_stats(table: list[dict]) -> list[dict]:
    """Mann-Whitney p and Vargha-Delaney effect size for every method pair and cell."""
    cells: dict[tuple, dict[str, list]] = {}
    for row in table:
        cells.setdefault((row["d_th"], row["t_b"]), {})[row["method"]] = row["values"]
    out = []
    for (d, t), by_method in cells.items():
        for m_a, m_b in itertools.combinations(sorted(by_method), 2):
            va, vb = by_method[m_a], by_method[m_b]
            out.append({"A": m_a, "B": m_b, "d_th": d, "t_b": t,
                        "p": mann_whitney_u(va, vb), "a12": vargha_delaney(va, vb)})
    return out
