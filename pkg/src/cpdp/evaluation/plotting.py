"""Figures for comparison and meta-learning reports (non-interactive backend)."""
from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import MethodSummary  # noqa: E402
from .stats import StatResult, letters_str  # noqa: E402


def mean_rank_chart(summary: Sequence[MethodSummary], path, stat: StatResult | None = None) -> None:
    """Horizontal bars of mean rank (best at top) annotated with LSD letter groups."""
    names = [s.method for s in summary]
    ranks = np.array([s.mean_rank for s in summary])
    sds = np.array([s.sd_rank for s in summary])
    fig, ax = plt.subplots(figsize=(7, 0.28 * len(names) + 1.2))
    y = np.arange(len(names))[::-1]
    ax.barh(y, ranks, xerr=sds, color="#5b8db8", ecolor="#999999", capsize=2)
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("mean rank (lower is better)")
    if stat is not None and stat.posthoc_applicable:
        right = float(np.max(ranks + sds)) if len(ranks) else 1.0
        for yi, name in zip(y, names):
            ax.text(right * 1.02, yi, letters_str(stat.group_of(name)), va="center", fontsize=7)
        ax.set_xlim(0, right * 1.15)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def auc_boxplot(table, path, methods: Sequence[str] | None = None) -> None:
    methods = list(methods) if methods is not None else table.methods
    data = [table.column(m)[np.isfinite(table.column(m))] for m in methods]
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(methods) + 1.5), 4))
    ax.boxplot(data)
    ax.set_xticks(range(1, len(methods) + 1))
    ax.set_xticklabels(methods, rotation=70, ha="right", fontsize=7)
    ax.set_ylabel("AUC")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def accuracy_chart(projects: Sequence[str], meta_acc: Sequence[float], majority_acc: Sequence[float],
                   path) -> None:
    """Per-project wrapper accuracy next to the majority-label baseline."""
    x = np.arange(len(projects))
    fig, ax = plt.subplots(figsize=(max(5, 0.45 * len(projects) + 1.5), 3.5))
    ax.bar(x - 0.2, meta_acc, 0.4, label="meta-learner", color="#5b8db8")
    ax.bar(x + 0.2, majority_acc, 0.4, label="majority", color="#c9a66b")
    ax.set_xticks(x)
    ax.set_xticklabels(projects, rotation=45, ha="right", fontsize=8)
    ax.set_ylim(0, 1)
    ax.set_ylabel("estimated accuracy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
