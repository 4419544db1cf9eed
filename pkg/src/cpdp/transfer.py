"""Transfer-learning data treatments and the 31 solution x classifier pipelines."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import derive_seed, rng_for
from .classifiers import (ClassifierSpec, DegenerateTrainingError, WeightedTrainSet,
                          separability_accuracy, train)
from .data import CrossProjectPool, DefectDataset

log = logging.getLogger(__name__)

SOLUTIONS = ("orig", "watanabe2008", "cruz2009", "turhan2009", "he2013", "herbold2013", "ma2012")
CLASSIFIERS = ("rf", "svm", "mlp", "c45", "nb")
SOLUTION_PREFIX = {
    "orig": "orig",
    "watanabe2008": "2008Watanabe",
    "cruz2009": "2009Cruz",
    "turhan2009": "2009Turhan",
    "he2013": "2013He",
    "herbold2013": "2013Herbold",
    "ma2012": "2012Ma",
}
_PREFIX_SOLUTION = {v: k for k, v in SOLUTION_PREFIX.items()}


class MethodError(RuntimeError):
    """A CPDP method could not produce predictions."""


@dataclass(frozen=True)
class CpdpMethod:
    solution: str
    classifier: str

    def __post_init__(self):
        if self.solution not in SOLUTIONS:
            raise ValueError(f"unknown solution {self.solution!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.solution == "ma2012" and self.classifier != "nb":
            raise ValueError("ma2012 is only defined with naive Bayes")

    @property
    def id(self) -> str:
        return f"{SOLUTION_PREFIX[self.solution]}_{self.classifier}"

    @classmethod
    def parse(cls, method_id: str) -> "CpdpMethod":
        prefix, _, clf = method_id.rpartition("_")
        if prefix not in _PREFIX_SOLUTION:
            raise ValueError(f"unknown method id {method_id!r}")
        return cls(_PREFIX_SOLUTION[prefix], clf)

    def __str__(self) -> str:
        return self.id


def all_methods() -> list[CpdpMethod]:
    methods = [CpdpMethod(s, c) for s in SOLUTIONS if s != "ma2012" for c in CLASSIFIERS]
    methods.append(CpdpMethod("ma2012", "nb"))
    return methods


@dataclass(frozen=True)
class HeParams:
    N: int = 10
    K: int | None = None  # None: min(|train_i|, |test|, 500) per candidate
    FSS: float = 0.8
    k_cap: int = 500

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.K is not None and self.K < 2:
            raise ValueError("K must be >= 2")
        if not 0 < self.FSS < 1:
            raise ValueError("FSS must lie in (0, 1)")


@dataclass
class MaWeights:
    s: np.ndarray
    w: np.ndarray
    k: int
    min_j: np.ndarray
    max_j: np.ndarray


# ---------------------------------------------------------------- transforms

def watanabe_transform(test, train):
    """Scale each test column by mean(train_j) / mean(test_j); zero-mean columns pass through."""
    test = np.asarray(test, dtype=float)
    tr_mean = np.asarray(train, dtype=float).mean(axis=0)
    te_mean = test.mean(axis=0)
    zero = te_mean == 0
    if zero.any():
        log.warning("watanabe: %d test column(s) with zero mean left unscaled", int(zero.sum()))
    ratio = np.divide(tr_mean, te_mean, out=np.ones_like(te_mean), where=~zero)
    return test * ratio


def cruz_transform(test, train):
    """Shift each test column by median(train_j) - median(test_j)."""
    test = np.asarray(test, dtype=float)
    shift = np.median(np.asarray(train, dtype=float), axis=0) - np.median(test, axis=0)
    return test + shift


# ------------------------------------------------------------------ filters

def _nearest(test: np.ndarray, pool: np.ndarray, k: int, chunk: int = 256) -> np.ndarray:
    """Indices of the k nearest pool rows per test row (ties resolved by pool order)."""
    k = min(k, len(pool))
    pool_sq = np.einsum("ij,ij->i", pool, pool)
    out = np.empty((len(test), k), dtype=np.int64)
    for start in range(0, len(test), chunk):
        t = test[start:start + chunk]
        d = pool_sq[None, :] - 2.0 * t @ pool.T + np.einsum("ij,ij->i", t, t)[:, None]
        # exact distances for the candidates avoid cancellation deciding ties
        cand = np.argpartition(d, k - 1, axis=1)[:, :k] if k < len(pool) else None
        for r in range(len(t)):
            if cand is None:
                idx = np.arange(len(pool))
            else:
                kth = d[r, cand[r]].max()
                idx = np.flatnonzero(d[r] <= kth + 1e-9 * (1.0 + abs(kth)))
            exact = ((pool[idx] - t[r]) ** 2).sum(axis=1)
            order = np.lexsort((idx, exact))
            out[start + r] = idx[order[:k]]
    return out


def turhan_filter(test: DefectDataset, pool: CrossProjectPool, k: int = 10) -> WeightedTrainSet:
    """Union of every test row's k nearest pooled rows, exact duplicates kept once."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    X, y = pool.concatenated()
    if len(X) <= k:
        chosen = np.arange(len(X))
    else:
        chosen = np.unique(_nearest(test.rows, X, k))
    rows = np.column_stack([X[chosen], y[chosen]])
    _, first = np.unique(rows, axis=0, return_index=True)
    keep = np.sort(chosen[first])
    return WeightedTrainSet(X[keep], y[keep])


def _characteristics(rows: np.ndarray) -> np.ndarray:
    return np.concatenate([rows.mean(axis=0), rows.std(axis=0)])


def herbold_select(test: DefectDataset, pool: CrossProjectPool, fraction: float = 0.5
                   ) -> list[int]:
    """Pool positions of the ceil(fraction * |pool|) datasets nearest the test set."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    chars = np.array([_characteristics(d.rows) for d in pool])
    mu = chars.mean(axis=0)
    sd = chars.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    z = (chars - mu) / sd
    zt = (_characteristics(test.rows) - mu) / sd
    dist = np.sqrt(((z - zt) ** 2).sum(axis=1))
    n_sel = min(len(pool), math.ceil(fraction * len(pool)))
    order = np.lexsort((np.arange(len(pool)), dist))
    return sorted(order[:n_sel].tolist())


def herbold_filter(test: DefectDataset, pool: CrossProjectPool, fraction: float = 0.5
                   ) -> WeightedTrainSet:
    """Rows of the nearest datasets by per-attribute (mean, sd), in pool order."""
    chosen = herbold_select(test, pool, fraction)
    sel = [pool.datasets[i] for i in chosen]
    return WeightedTrainSet(np.vstack([d.rows for d in sel]),
                            np.concatenate([d.labels for d in sel]))


def ma_weights(train, test) -> MaWeights:
    """Data-gravitation weights: s_i counts attributes inside the test ranges,
    w_i = s_i / (k - s_i + 1)^2."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    if train.shape[1] != test.shape[1]:
        raise ValueError("train and test must have the same width")
    k = train.shape[1]
    lo = test.min(axis=0)
    hi = test.max(axis=0)
    s = ((train >= lo) & (train <= hi)).sum(axis=1)
    w = s / (k - s + 1.0) ** 2
    return MaWeights(s=s, w=w, k=k, min_j=lo, max_j=hi)


# ------------------------------------------------------------------ 2013He

def information_gain(x: np.ndarray, labels: np.ndarray, bins: int = 10) -> float:
    """Information gain of a continuous attribute after equal-frequency binning."""
    edges = np.unique(np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1]))
    codes = np.searchsorted(edges, x, side="right")
    return _entropy(labels) - sum(
        (codes == c).mean() * _entropy(labels[codes == c]) for c in np.unique(codes))


def _entropy(labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    p = np.bincount(labels.astype(np.int64), minlength=2) / len(labels)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


@dataclass
class HeMember:
    dataset: DefectDataset
    attributes: tuple[int, ...]
    separability: float
    information_gain: np.ndarray = field(repr=False)


def he_select(test: DefectDataset, pool: CrossProjectPool, p: HeParams = HeParams(),
              seed: int = 0) -> list[HeMember]:
    """The N pool datasets hardest to separate from the test set, each with its
    stable attribute subset (the FSS share of highest-gain attributes removed)."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    m = test.rows.shape[1]
    n_remove = math.floor(p.FSS * m)
    scored = []
    for pos, d in enumerate(pool):
        rng = rng_for(seed, "he-sam", test.name, d.name)
        K = p.K if p.K is not None else min(d.n, test.n, p.k_cap)
        K = min(K, d.n, test.n)
        a = d.rows[np.sort(rng.choice(d.n, K, replace=False))]
        b = test.rows[np.sort(rng.choice(test.n, K, replace=False))]
        acc = separability_accuracy(a, b, seed=derive_seed(seed, "he-sep", test.name, d.name))
        sam = np.vstack([a, b])
        src = np.concatenate([np.zeros(K, np.int8), np.ones(K, np.int8)])
        gains = np.array([information_gain(sam[:, j], src) for j in range(m)])
        scored.append((acc, pos, d, gains))
    scored.sort(key=lambda t: (t[0], t[1]))
    members = []
    for acc, _, d, gains in scored[:p.N]:
        removed = set(np.argsort(-gains, kind="stable")[:n_remove].tolist())
        keep = tuple(j for j in range(m) if j not in removed)
        members.append(HeMember(d, keep, acc, gains))
    return members


def he_predict(members: Sequence[HeMember], test: DefectDataset, spec: ClassifierSpec
               ) -> np.ndarray:
    """Mean score over the members' models, each trained on its kept attributes."""
    if not members:
        raise MethodError("he_predict needs at least one member")
    scores = []
    for mem in members:
        cols = list(mem.attributes)
        try:
            model = train(spec, WeightedTrainSet(mem.dataset.rows[:, cols], mem.dataset.labels))
        except DegenerateTrainingError as exc:
            log.warning("he: skipping member %s (%s)", mem.dataset.name, exc)
            continue
        scores.append(model.score(test.rows[:, cols]))
    if not scores:
        raise MethodError("every ensemble member failed to train")
    return np.mean(scores, axis=0)


# -------------------------------------------------------------- dispatching

def classifier_spec(kind: str, seed: int, dataset: str) -> ClassifierSpec:
    """Classifier seeds depend on (run seed, classifier, test dataset) only, so that
    identical training data gives identical scores whatever the solution."""
    return ClassifierSpec(kind, seed=derive_seed(seed, "clf", kind, dataset))


def run_method(method: CpdpMethod, test: DefectDataset, pool: CrossProjectPool, seed: int = 0,
               *, he_params: HeParams = HeParams(), turhan_k: int = 10,
               herbold_fraction: float = 0.5) -> np.ndarray:
    """Scores for every test row after applying the method's data treatment."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    spec = classifier_spec(method.classifier, seed, test.name)
    sol = method.solution
    if sol == "he2013":
        return he_predict(he_select(test, pool, he_params, seed=seed), test, spec)
    X_test = test.rows
    if sol == "turhan2009":
        data = turhan_filter(test, pool, turhan_k)
    elif sol == "herbold2013":
        data = herbold_filter(test, pool, herbold_fraction)
    else:
        X, y = pool.concatenated()
        if sol == "ma2012":
            data = WeightedTrainSet(X, y, ma_weights(X, X_test).w)
        else:
            data = WeightedTrainSet(X, y)
            if sol == "watanabe2008":
                X_test = watanabe_transform(X_test, X)
            elif sol == "cruz2009":
                X_test = cruz_transform(X_test, X)
    try:
        model = train(spec, data)
    except DegenerateTrainingError as exc:
        raise MethodError(f"{method.id} on {test.name}: {exc}") from exc
    return model.score(X_test)


@dataclass
class RunRecord:
    method: str
    dataset: str
    seed: int
    wall_ms: float
    scores: np.ndarray = field(repr=False)


def timed_run(method: CpdpMethod, test: DefectDataset, pool: CrossProjectPool, seed: int,
              **kwargs) -> RunRecord:
    t0 = time.perf_counter()
    scores = run_method(method, test, pool, seed, **kwargs)
    return RunRecord(method.id, test.name, seed, 1000 * (time.perf_counter() - t0), scores)
