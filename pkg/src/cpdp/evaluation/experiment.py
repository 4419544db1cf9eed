"""Cross-project leave-one-out experiments and their performance tables."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..data import DefectDataset, build_pool
from ..transfer import CpdpMethod, MethodError, timed_run
from .metrics import UndefinedAUCError, auc, rank_row, round_auc
from .stats import StatResult, compact_letters, friedman, pairwise_lsd

log = logging.getLogger(__name__)


class PerformanceTable:
    """AUC per (dataset, method); NaN marks an undefined cell.

    ``rounded`` holds AUCs at two decimals and ``ranks`` the per-row average-tie
    ranks of the rounded values (1 = best). Rows with any undefined cell are left
    unranked and excluded from statistics.
    """

    def __init__(self, datasets: Sequence[str], methods: Sequence[str], auc_values):
        self.datasets = list(datasets)
        self.methods = list(methods)
        self.auc = np.array(auc_values, dtype=float).reshape(len(self.datasets), len(self.methods))
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method ids")
        self.rounded = np.vectorize(round_auc, otypes=[float])(self.auc) if self.auc.size else self.auc.copy()
        self.ranks = np.full_like(self.auc, np.nan)
        for i, row in enumerate(self.rounded):
            if np.all(np.isfinite(row)):
                self.ranks[i] = rank_row(row)

    @property
    def complete(self) -> np.ndarray:
        return np.all(np.isfinite(self.auc), axis=1)

    def column(self, method: str) -> np.ndarray:
        return self.auc[:, self.methods.index(method)]

    def subset(self, methods: Sequence[str] | None = None, datasets: Sequence[str] | None = None
               ) -> "PerformanceTable":
        methods = list(methods) if methods is not None else self.methods
        datasets = list(datasets) if datasets is not None else self.datasets
        ci = [self.methods.index(m) for m in methods]
        ri = [self.datasets.index(d) for d in datasets]
        return PerformanceTable(datasets, methods, self.auc[np.ix_(ri, ci)])

    def with_columns(self, extra: dict[str, np.ndarray]) -> "PerformanceTable":
        cols = [self.auc] + [np.asarray(v, dtype=float)[:, None] for v in extra.values()]
        return PerformanceTable(self.datasets, self.methods + list(extra), np.hstack(cols))

    @classmethod
    def from_cells(cls, cells: Sequence[dict]) -> "PerformanceTable":
        datasets = list(dict.fromkeys(c["dataset"] for c in cells))
        methods = list(dict.fromkeys(c["method"] for c in cells))
        values = np.full((len(datasets), len(methods)), np.nan)
        for c in cells:
            values[datasets.index(c["dataset"]), methods.index(c["method"])] = float(c["auc"])
        return cls(datasets, methods, values)

    def __repr__(self) -> str:
        return f"PerformanceTable({len(self.datasets)} datasets x {len(self.methods)} methods)"


@dataclass
class Cell:
    dataset: str
    method: str
    auc: float
    seed: int
    wall_ms: float


def _run_cell(args) -> Cell:
    method, target, collection, seed = args
    pool = build_pool(collection, target)
    try:
        rec = timed_run(method, target, pool, seed)
        value = auc(rec.scores, target.labels)
        wall = rec.wall_ms
    except (UndefinedAUCError, MethodError) as exc:
        log.warning("%s / %s: %s", target.name, method.id, exc)
        value, wall = float("nan"), 0.0
    return Cell(target.name, method.id, value, seed, wall)


def cploo(datasets: Sequence[DefectDataset], methods: Sequence[CpdpMethod], seed: int = 0,
          jobs: int = 1, targets: Sequence[str] | None = None,
          progress: Callable[[Cell], None] | None = None) -> tuple[PerformanceTable, list[Cell]]:
    """Evaluate every method on every version, training on the other projects only.

    ``targets`` optionally restricts which versions are tested (the pools always
    come from the full collection).
    """
    projects = {d.project for d in datasets}
    if len(projects) < 2:
        raise ValueError("cross-project evaluation needs at least two projects")
    tested = [d for d in datasets if targets is None or d.name in set(targets)]
    tasks = [(m, d, list(datasets), seed) for d in tested for m in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            cells = []
            for c in ex.map(_run_cell, tasks, chunksize=1):
                cells.append(c)
                if progress:
                    progress(c)
    else:
        cells = []
        for t in tasks:
            c = _run_cell(t)
            cells.append(c)
            if progress:
                progress(c)
    values = np.array([c.auc for c in cells]).reshape(len(tested), len(methods))
    table = PerformanceTable([d.name for d in tested], [m.id for m in methods], values)
    bad = int((~table.complete).sum())
    if bad:
        log.warning("%d dataset row(s) have undefined AUC cells and are excluded from ranking", bad)
    return table, cells


@dataclass
class MethodSummary:
    method: str
    mean_rank: float
    sd_rank: float
    mean_auc: float
    sd_auc: float


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def summarize(table: PerformanceTable) -> list[MethodSummary]:
    """Per-method mean/sd of rank and AUC over complete rows, best mean rank first."""
    rows = table.complete
    out = []
    for j, m in enumerate(table.methods):
        r = table.ranks[rows, j]
        a = table.auc[rows, j]
        out.append(MethodSummary(m, float(r.mean()), _sd(r), float(a.mean()), _sd(a)))
    order = sorted(range(len(out)), key=lambda j: (out[j].mean_rank, j))
    return [out[j] for j in order]


def analyze(table: PerformanceTable, alpha: float = 0.05) -> StatResult:
    """Friedman test on the rank table followed, when it rejects, by Fisher's LSD."""
    rows = table.complete
    ranks = table.ranks[rows]
    k = len(table.methods)
    mean_rank = ranks.mean(axis=0) if rows.any() else np.full(k, np.nan)
    result = StatResult(
        methods=list(table.methods), friedman_statistic=0.0, p_value=1.0, mean_rank=mean_rank,
        mean_auc=table.auc[rows].mean(axis=0) if rows.any() else None,
        sd_auc=np.array([_sd(table.auc[rows, j]) for j in range(k)]),
        pairwise_significant=np.zeros((k, k), dtype=bool), alpha=alpha,
        groups=[("a",)] * k, n_blocks=int(rows.sum()),
    )
    if k < 2 or rows.sum() < 2:
        return result
    result.friedman_statistic, result.p_value = friedman(ranks)
    if result.p_value > alpha:
        return result
    sig, thr = pairwise_lsd(ranks, alpha)
    order = np.lexsort((np.arange(k), mean_rank))
    result.pairwise_significant = sig
    result.lsd_threshold = thr
    result.groups = compact_letters(sig, order)
    result.posthoc_applicable = True
    return result


def fisher_lsd(table: PerformanceTable, alpha: float = 0.05) -> StatResult:
    return analyze(table, alpha)
