"""Delimited and Markdown reports for experiment results."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from ..data import ConfigError
from .experiment import Cell, MethodSummary, PerformanceTable
from .stats import StatResult, letters_str

CELL_COLUMNS = ("dataset", "method", "auc", "seed", "wall_ms")


def _fmt(x: float) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def write_cells(cells: Sequence[Cell], path, record_timings: bool = False) -> None:
    """Raw per-cell results. ``wall_ms`` stays empty unless timings are requested,
    which keeps the file byte-identical across runs with the same seed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CELL_COLUMNS)
        for c in cells:
            w.writerow([c.dataset, c.method, _fmt(c.auc), c.seed,
                        f"{c.wall_ms:.1f}" if record_timings else ""])


def write_timings(cells: Sequence[Cell], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("dataset", "method", "wall_ms"))
        for c in cells:
            w.writerow([c.dataset, c.method, f"{c.wall_ms:.1f}"])


def read_cells(path) -> PerformanceTable:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("dataset", "method", "auc") if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = [dict(r, auc="nan" if r["auc"] in ("", "NA") else r["auc"]) for r in reader]
    if not rows:
        raise ConfigError(f"{path}: no cells")
    return PerformanceTable.from_cells(rows)


def write_table(table: PerformanceTable, path) -> None:
    """Wide AUC matrix: one row per dataset, one column per method."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", *table.methods])
        for name, row in zip(table.datasets, table.auc):
            w.writerow([name, *[_fmt(v) for v in row]])


def write_summary(summary: Sequence[MethodSummary], path, stat: StatResult | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("method", "mean_rank", "sd_rank", "mean_auc", "sd_auc", "group"))
        for s in summary:
            group = letters_str(stat.group_of(s.method)) if stat and stat.posthoc_applicable else ""
            w.writerow([s.method, f"{s.mean_rank:.2f}", f"{s.sd_rank:.2f}",
                        f"{s.mean_auc:.3f}", f"{s.sd_auc:.3f}", group])


def markdown_summary(summary: Sequence[MethodSummary], stat: StatResult | None = None) -> str:
    lines = ["| Method | Mean Rank | SD Rank | Mean AUC | SD AUC | Group |",
             "|---|---:|---:|---:|---:|:---:|"]
    for s in summary:
        group = letters_str(stat.group_of(s.method)) if stat and stat.posthoc_applicable else "-"
        lines.append(f"| {s.method} | {s.mean_rank:.2f} | {s.sd_rank:.2f} | "
                     f"{s.mean_auc:.3f} | {s.sd_auc:.3f} | {group} |")
    return "\n".join(lines)


def stats_markdown(summary: Sequence[MethodSummary], stat: StatResult) -> str:
    out = ["# Method comparison", ""]
    out.append(f"Datasets ranked: {stat.n_blocks}; methods: {len(stat.methods)}.")
    if len(stat.methods) < 2 or stat.n_blocks < 2:
        out.append("")
        out.append("Friedman test skipped: needs at least two methods and two complete datasets.")
    else:
        out.append("")
        out.append(f"Friedman chi-square = {stat.friedman_statistic:.4f}, "
                   f"df = {len(stat.methods) - 1}, p = {stat.p_value:.4g}")
        out.append("")
        if stat.posthoc_applicable:
            out.append(f"Fisher's LSD on rank sums (alpha = {stat.alpha}): critical difference "
                       f"{stat.lsd_threshold:.4f}. Methods sharing a letter are not "
                       "significantly different.")
        else:
            out.append(f"Post-hoc test not applicable: Friedman p > alpha = {stat.alpha}.")
    out += ["", markdown_summary(summary, stat), ""]
    return "\n".join(out)


def write_stats(summary: Sequence[MethodSummary], stat: StatResult, path) -> None:
    Path(path).write_text(stats_markdown(summary, stat), encoding="utf-8")


def pairwise_csv(stat: StatResult, path) -> None:
    if stat.pairwise_significant is None:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", *stat.methods])
        for m, row in zip(stat.methods, np.asarray(stat.pairwise_significant)):
            w.writerow([m, *["1" if v else "0" for v in row]])
