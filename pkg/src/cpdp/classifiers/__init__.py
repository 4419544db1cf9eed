"""Base classifiers exposing real-valued defect-proneness scores."""
from __future__ import annotations

import numpy as np

from .base import (KINDS, ClassifierSpec, DataError, DegenerateTrainingError, TrainedModel,
                   WeightedTrainSet, check_train)
from .logistic import LogisticRegression
from .mlp import MLP
from .nb import GaussianNB
from .svm import LinearSVM
from .trees import C45Tree, RandomForest

_MODELS = {
    "nb": GaussianNB,
    "rf": RandomForest,
    "c45": C45Tree,
    "svm": LinearSVM,
    "mlp": MLP,
    "logistic": LogisticRegression,
}
# kinds that use per-example weights natively
WEIGHTED_KINDS = {"nb", "logistic"}

__all__ = [
    "KINDS", "ClassifierSpec", "DataError", "DegenerateTrainingError", "TrainedModel",
    "WeightedTrainSet", "train", "score", "separability_accuracy",
]


def train(spec: ClassifierSpec, data: WeightedTrainSet) -> TrainedModel:
    """Fit the classifier named by ``spec.kind`` on ``data``."""
    check_train(data)
    if spec.kind not in WEIGHTED_KINDS and not data.uniform:
        raise ValueError(f"classifier {spec.kind!r} does not support per-example weights")
    return _MODELS[spec.kind](spec, data)


def score(model: TrainedModel, row) -> float:
    """Score a single row; higher means more defect-prone."""
    row = np.asarray(row, dtype=float)
    if row.ndim != 1:
        raise DataError("score expects one row; use model.score for matrices")
    return float(model.score(row[None, :])[0])


def stratified_halves(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Assign each example to fold 0 or 1, splitting every class as evenly as possible."""
    fold = np.empty(len(labels), dtype=np.int8)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        fold[idx] = np.arange(len(idx)) % 2
    return fold


def separability_accuracy(a, b, seed: int = 0) -> float:
    """Accuracy of a logistic model telling rows of ``a`` from rows of ``b``.

    Estimated with stratified 2-fold cross-validation on the merged rows, so 0.5
    means the two sources are indistinguishable.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError(f"width mismatch: {a.shape} vs {b.shape}")
    if len(a) == 0 or len(b) == 0:
        raise DataError("both sources need at least one row")
    X = np.vstack([a, b])
    y = np.concatenate([np.zeros(len(a), np.int8), np.ones(len(b), np.int8)])
    fold = stratified_halves(y, np.random.default_rng(seed))
    spec = ClassifierSpec("logistic", seed=seed)
    correct = 0
    for k in (0, 1):
        tr, te = fold != k, fold == k
        if not te.any():
            continue
        if len(np.unique(y[tr])) < 2:
            # a one-row class cannot be split across folds; predict the majority
            pred = np.full(te.sum(), np.bincount(y[tr]).argmax())
        else:
            model = train(spec, WeightedTrainSet(X[tr], y[tr]))
            pred = (model.score(X[te]) > 0.5).astype(np.int8)
        correct += int((pred == y[te]).sum())
    return correct / len(y)
