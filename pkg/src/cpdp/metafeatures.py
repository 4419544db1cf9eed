"""Dataset-level meta-features.

``ms_dist`` summarizes each metric by its distribution (101 values); ``ms_uns``
uses general, statistical and cluster-validity measures (44 values). Both are
unsupervised: defect labels are never read.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from ._rng import derive_seed
from .data import METRICS, DefectDataset

log = logging.getLogger(__name__)

SET_KINDS = ("ms_dist", "ms_uns")
DIST_MEASURES = ("mean", "sd", "med", "max", "min")
UNS_FAMILIES = ("mean", "sd", "entr", "corr", "skew", "kurt")
AGGREGATIONS = ("min", "max", "mean", "minmax")
CLUSTER_RATIOS = (1.0, 1.5, 2.0)
N_CLASSES = 2
CONNECTIVITY_L = 10
MIN_ROWS_FOR_CLUSTERING = 5


class DegenerateClusteringError(ValueError):
    """The rows cannot be split into the requested number of non-empty clusters."""


def _ratio_tag(r: float) -> str:
    return f"{r:g}"


def ms_dist_names(metrics: Sequence[str] = METRICS) -> tuple[str, ...]:
    return tuple(f"{m}_{s}" for m in metrics for s in DIST_MEASURES) + ("size",)


def ms_uns_names() -> tuple[str, ...]:
    names = ["size", "size_lg"]
    names += [f"{f}_{a}" for f in UNS_FAMILIES for a in AGGREGATIONS]
    names += [f"{v}_{algo}{_ratio_tag(r)}" for v in ("conn", "dunn", "silh")
              for algo in ("k", "h") for r in CLUSTER_RATIOS]
    return tuple(names)


@dataclass(frozen=True, eq=False)
class MetaFeatureVector:
    names: tuple[str, ...]
    values: np.ndarray
    source: str
    set_kind: str

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.set_kind not in SET_KINDS + ("custom",):
            raise ValueError(f"unknown meta-feature set {self.set_kind!r}")
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        if self.set_kind == "custom":
            return
        expected = 101 if self.set_kind == "ms_dist" else 44
        if len(self.names) != expected:
            raise ValueError(f"{self.set_kind} needs {expected} features, got {len(self.names)}")

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    def __len__(self) -> int:
        return len(self.names)


# ------------------------------------------------------------------ MS-Dist

def ms_dist(d: DefectDataset) -> MetaFeatureVector:
    X = d.rows
    if X.shape[0] < 1:
        raise ValueError("ms_dist needs at least one row")
    stats = np.vstack([X.mean(axis=0), X.std(axis=0), np.median(X, axis=0),
                       X.max(axis=0), X.min(axis=0)])
    values = np.append(stats.T.ravel(), X.shape[0])
    return MetaFeatureVector(ms_dist_names(d.schema.names), values, d.name, "ms_dist")


# ------------------------------------------------------------------ MS-Uns

def _aggregate(values: np.ndarray, family: str, source: str) -> list[float]:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return [0.0] * 4
    lo, hi, mu = float(values.min()), float(values.max()), float(values.mean())
    if hi == 0:
        log.warning("%s: %s_minmax has max 0; emitting 0", source, family)
        ratio = 0.0
    else:
        ratio = lo / hi
    return [lo, hi, mu, ratio]


def column_entropy(x: np.ndarray) -> float:
    """Normalized entropy of a column rescaled to a probability vector."""
    n = len(x)
    p = x - x.min()
    total = p.sum()
    if n < 2 or total <= 0:
        return 0.0
    p = p[p > 0] / total
    return float(-np.sum(p * np.log(p)) / math.log(n))


def column_skew(x: np.ndarray) -> float:
    n = len(x)
    sd = x.std()
    if n < 3 or sd == 0:
        return float("nan")
    return float(n / ((n - 1) * (n - 2)) * np.sum(((x - x.mean()) / sd) ** 3))


def column_kurt(x: np.ndarray) -> float:
    n = len(x)
    sd = x.std()
    if n < 4 or sd == 0:
        return float("nan")
    s4 = np.sum(((x - x.mean()) / sd) ** 4)
    return float(n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * s4
                 - 3 * (n - 1) ** 2 / ((n - 2) * (n - 3)))


def pair_correlations(X: np.ndarray) -> np.ndarray:
    """Pearson correlation of every attribute pair; pairs with a constant column are dropped."""
    sd = X.std(axis=0)
    keep = sd > 0
    if keep.sum() < 2:
        return np.empty(0)
    Z = (X[:, keep] - X[:, keep].mean(axis=0)) / sd[keep]
    C = Z.T @ Z / X.shape[0]
    iu = np.triu_indices(C.shape[0], 1)
    return np.clip(C[iu], -1.0, 1.0)


def _zscore(X: np.ndarray) -> np.ndarray:
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def n_clusters(ratio: float) -> int:
    return max(2, int(round(ratio * N_CLASSES)))


def _connectivity(D: np.ndarray, labels: np.ndarray, L: int) -> float:
    n = D.shape[0]
    L = min(L, n - 1)
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    # stable sort keeps neighbour order deterministic among equidistant rows
    nn = np.argsort(D, axis=1, kind="stable")[:, :L]
    differ = labels[nn] != labels[:, None]
    return float(np.sum(differ / np.arange(1, L + 1)))


def _dunn(D: np.ndarray, labels: np.ndarray) -> float:
    same = labels[:, None] == labels[None, :]
    diameter = np.max(np.where(same, D, 0.0))
    separation = np.min(np.where(same, np.inf, D))
    if diameter == 0:
        raise DegenerateClusteringError("every cluster has zero diameter")
    return float(separation / diameter)


def _partition(Z: np.ndarray, algo: str, k: int, seed: int) -> np.ndarray:
    if algo == "kmeans":
        with warnings.catch_warnings():
            # sklearn warns when fewer distinct points than clusters; handled below
            warnings.simplefilter("ignore")
            labels = KMeans(n_clusters=k, n_init=10, max_iter=100,
                            random_state=seed).fit_predict(Z)
    elif algo == "hier":
        labels = fcluster(linkage(Z, method="average"), k, criterion="maxclust") - 1
    else:
        raise ValueError(f"unknown clustering algorithm {algo!r}")
    if len(np.unique(labels)) != k:
        raise DegenerateClusteringError(f"{algo} produced {len(np.unique(labels))} of {k} clusters")
    return labels


def cluster_validity(rows, algo: str, ratio: float, seed: int = 0,
                     L: int = CONNECTIVITY_L) -> tuple[float, float, float]:
    """(connectivity, Dunn index, mean silhouette) of a k-cluster partition of the
    z-scored rows, where k = max(2, round(ratio * 2))."""
    X = np.asarray(rows, dtype=float)
    k = n_clusters(ratio)
    if X.ndim != 2 or X.shape[0] <= k:
        raise DegenerateClusteringError(f"need more than {k} rows to form {k} clusters")
    Z = _zscore(X)
    if len(np.unique(Z, axis=0)) < k:
        raise DegenerateClusteringError(f"fewer than {k} distinct rows")
    labels = _partition(Z, algo, k, seed)
    D = squareform(pdist(Z))
    sil = float(silhouette_score(D, labels, metric="precomputed"))
    return _connectivity(D, labels, L), _dunn(D, labels), sil


def ms_uns(d: DefectDataset, seed: int = 0) -> MetaFeatureVector:
    """Undefined clustering measures come back as NaN (see ``impute``)."""
    X = d.rows
    n = X.shape[0]
    if n < 1:
        raise ValueError("ms_uns needs at least one row")
    values = [float(n), math.log(n)]
    per_column = {
        "mean": X.mean(axis=0),
        "sd": X.std(axis=0),
        "entr": np.array([column_entropy(c) for c in X.T]),
        "corr": pair_correlations(X),
        "skew": np.array([column_skew(c) for c in X.T]),
        "kurt": np.array([column_kurt(c) for c in X.T]),
    }
    for f in UNS_FAMILIES:
        values += _aggregate(per_column[f], f, d.name)
    cluster = {}
    for algo, tag in (("kmeans", "k"), ("hier", "h")):
        for r in CLUSTER_RATIOS:
            try:
                if n < MIN_ROWS_FOR_CLUSTERING:
                    raise DegenerateClusteringError(f"only {n} rows")
                res = cluster_validity(X, algo, r, seed=derive_seed(seed, "kmeans", r, d.name))
            except DegenerateClusteringError as exc:
                log.warning("%s: %s clustering (ratio %g) undefined, imputed: %s", d.name, algo, r, exc)
                res = (math.nan,) * 3
            cluster[tag, r] = res
    for i in range(3):
        for tag in ("k", "h"):
            for r in CLUSTER_RATIOS:
                values.append(cluster[tag, r][i])
    return MetaFeatureVector(ms_uns_names(), np.array(values), d.name, "ms_uns")


# ------------------------------------------------------------------ matrices

def extract(datasets: Sequence[DefectDataset], set_kind: str, seed: int = 0
            ) -> list[MetaFeatureVector]:
    if set_kind == "ms_dist":
        return [ms_dist(d) for d in datasets]
    if set_kind == "ms_uns":
        return impute([ms_uns(d, seed) for d in datasets])
    raise ValueError(f"unknown meta-feature set {set_kind!r}")


def impute(vectors: Sequence[MetaFeatureVector]) -> list[MetaFeatureVector]:
    """Replace undefined values with the feature's mean over the other vectors (0 if none)."""
    if not vectors:
        return []
    M = np.vstack([v.values for v in vectors])
    bad = ~np.isfinite(M)
    if not bad.any():
        return list(vectors)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fill = np.nanmean(np.where(bad, np.nan, M), axis=0)
    fill = np.where(np.isfinite(fill), fill, 0.0)
    M = np.where(bad, fill[None, :], M)
    return [MetaFeatureVector(v.names, row, v.source, v.set_kind) for v, row in zip(vectors, M)]


def write_features(vectors: Sequence[MetaFeatureVector], path) -> None:
    if not vectors:
        raise ValueError("no meta-feature vectors to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", *vectors[0].names])
        for v in vectors:
            w.writerow([v.source, *[repr(float(x)) for x in v.values]])


def read_features(path, set_kind: str) -> list[MetaFeatureVector]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [MetaFeatureVector(header[1:], [float(x) for x in row[1:]], row[0], set_kind)
                for row in reader if row]
