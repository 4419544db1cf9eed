"""Friedman rank test, Fisher's LSD on rank sums and compact letter displays."""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass
class StatResult:
    methods: list[str]
    friedman_statistic: float
    p_value: float
    mean_rank: np.ndarray
    mean_auc: np.ndarray | None = None
    sd_auc: np.ndarray | None = None
    pairwise_significant: np.ndarray | None = None
    lsd_threshold: float | None = None
    groups: list[tuple[str, ...]] = field(default_factory=list)
    alpha: float = 0.05
    posthoc_applicable: bool = False
    n_blocks: int = 0

    def group_of(self, method: str) -> tuple[str, ...]:
        return self.groups[self.methods.index(method)]


def friedman(ranks: np.ndarray) -> tuple[float, float]:
    """Friedman chi-square (tie-corrected) and its p-value from an n x k rank matrix."""
    ranks = np.asarray(ranks, dtype=float)
    n, k = ranks.shape
    if n < 2 or k < 2:
        raise ValueError("Friedman test needs at least 2 blocks and 2 treatments")
    mean_rank = ranks.mean(axis=0)
    chi2 = 12.0 * n / (k * (k + 1)) * np.sum((mean_rank - (k + 1) / 2.0) ** 2)
    ties = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        ties += np.sum(counts**3 - counts)
    correction = 1.0 - ties / (n * (k**3 - k))
    if correction <= 1e-12:
        return 0.0, 1.0
    chi2 /= correction
    return float(chi2), float(stats.chi2.sf(chi2, k - 1))


def lsd_threshold(ranks: np.ndarray, alpha: float = 0.05) -> float:
    """Smallest rank-sum difference declared significant (Conover's form)."""
    ranks = np.asarray(ranks, dtype=float)
    n, k = ranks.shape
    A1 = np.sum(ranks**2)
    R = ranks.sum(axis=0)
    df = (n - 1) * (k - 1)
    spread = max(2.0 * (n * A1 - np.sum(R**2)) / df, 0.0)
    return float(stats.t.ppf(1 - alpha / 2, df) * np.sqrt(spread))


def pairwise_lsd(ranks: np.ndarray, alpha: float = 0.05) -> tuple[np.ndarray, float]:
    ranks = np.asarray(ranks, dtype=float)
    R = ranks.sum(axis=0)
    thr = lsd_threshold(ranks, alpha)
    diff = np.abs(R[:, None] - R[None, :])
    sig = diff > thr + 1e-9 * max(1.0, thr)
    np.fill_diagonal(sig, False)
    return sig, thr


def compact_letters(significant: np.ndarray, order: Sequence[int] | None = None
                    ) -> list[tuple[str, ...]]:
    """Letter groups such that two treatments share a letter iff they are not
    significantly different (insert-and-absorb); letters follow ``order``."""
    sig = np.asarray(significant, dtype=bool)
    k = sig.shape[0]
    order = list(range(k)) if order is None else list(order)
    columns = [frozenset(range(k))]
    for i in range(k):
        for j in range(i + 1, k):
            if not sig[i, j]:
                continue
            new = []
            for col in columns:
                if i in col and j in col:
                    new.append(col - {i})
                    new.append(col - {j})
                else:
                    new.append(col)
            # absorb: drop columns contained in another column
            uniq = list(dict.fromkeys(new))
            columns = [c for c in uniq if not any(c < o for o in uniq)]
    position = {t: p for p, t in enumerate(order)}
    columns.sort(key=lambda c: (min(position[t] for t in c), sorted(position[t] for t in c)))
    labels = _letter_names(len(columns))
    groups: list[list[str]] = [[] for _ in range(k)]
    for name, col in zip(labels, columns):
        for t in col:
            groups[t].append(name)
    return [tuple(g) for g in groups]


def _letter_names(n: int) -> list[str]:
    letters = string.ascii_lowercase
    out = []
    for i in range(n):
        name = ""
        i += 1
        while i:
            i, r = divmod(i - 1, 26)
            name = letters[r] + name
        out.append(name)
    return out


def share_letter(a: Sequence[str], b: Sequence[str]) -> bool:
    return bool(set(a) & set(b))


def letters_str(g: Sequence[str]) -> str:
    return "".join(g) if all(len(x) == 1 for x in g) else ",".join(g)
