import math

import numpy as np

from . import _tree
from .base import TrainedModel


class C45Tree(TrainedModel):
    """Single gain-ratio tree; leaves score with their positive frequency (no Laplace)."""

    def __init__(self, spec, data):
        self.spec = spec
        hp = spec.hyperparameters
        X = np.ascontiguousarray(data.rows)
        y = data.labels.astype(np.float64)
        self.n_features = X.shape[1]
        _tree.seed_numba(int(spec.seed))
        idx = np.arange(X.shape[0], dtype=np.int64)
        ranks, uniq, n_uniq = _tree.dense_ranks(X)
        (self.feature, self.threshold, self.left, self.right,
         self.value) = _tree.grow_tree(X, y, idx, ranks, uniq, n_uniq, self.n_features,
                                       int(hp.get("min_leaf", 2)),
                                       int(hp.get("max_depth", 25)), _tree.GAIN_RATIO)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def _score(self, X):
        return _tree.apply_tree(np.ascontiguousarray(X), self.feature, self.threshold,
                                self.left, self.right, self.value, 0)


def default_max_features(m: int) -> int:
    return int(math.floor(math.log2(m) + 1)) if m > 0 else 1


class RandomForest(TrainedModel):
    """Bagged unpruned info-gain trees with per-node attribute subsampling.

    The score is the fraction of trees voting defective.
    """

    def __init__(self, spec, data):
        self.spec = spec
        hp = spec.hyperparameters
        X = np.ascontiguousarray(data.rows)
        y = data.labels.astype(np.float64)
        m = X.shape[1]
        self.n_features = m
        self.n_trees = int(hp.get("n_trees", 100))
        max_features = int(hp.get("max_features", default_max_features(m)))
        max_depth = hp.get("max_depth")
        max_depth = 1 << 30 if max_depth is None else int(max_depth)
        ranks, uniq, n_uniq = _tree.dense_ranks(X)
        (self.feature, self.threshold, self.left, self.right, self.value,
         self.offsets) = _tree.grow_forest(X, y, ranks, uniq, n_uniq, self.n_trees,
                                           min(max_features, m), int(hp.get("min_leaf", 1)),
                                           max_depth, int(spec.seed))

    def _score(self, X):
        return _tree.forest_votes(np.ascontiguousarray(X), self.feature, self.threshold,
                                  self.left, self.right, self.value, self.offsets)

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "offsets": self.offsets.tolist(),
        }

    @classmethod
    def from_dict(cls, spec, d: dict) -> "RandomForest":
        self = cls.__new__(cls)
        self.spec = spec
        self.n_features = int(d["n_features"])
        self.feature = np.asarray(d["feature"], dtype=np.int64)
        self.threshold = np.asarray(d["threshold"], dtype=np.float64)
        self.left = np.asarray(d["left"], dtype=np.int64)
        self.right = np.asarray(d["right"], dtype=np.int64)
        self.value = np.asarray(d["value"], dtype=np.float64)
        self.offsets = np.asarray(d["offsets"], dtype=np.int64)
        self.n_trees = self.offsets.shape[0] - 1
        return self
