from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np
from scipy.stats import rankdata


class UndefinedAUCError(ValueError):
    """AUC needs at least one positive and one negative example."""


def auc(scores, labels) -> float:
    """Area under the ROC curve as the normalized Mann-Whitney statistic.

    Tied scores across a positive/negative pair earn half credit.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and of equal length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC is undefined for single-class labels")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def round_auc(x: float, places: int = 2) -> float:
    """Half-even rounding on the shortest decimal representation of ``x``."""
    if x != x:
        return x
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_EVEN))


def rank_row(values) -> np.ndarray:
    """Ranks with 1 for the largest value; ties share their average position."""
    return rankdata(-np.asarray(values, dtype=float), method="average")
