from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

KINDS = ("nb", "rf", "c45", "svm", "mlp", "logistic")


class DataError(ValueError):
    """Feature data is malformed (NaN, wrong width, mismatched lengths)."""


class DegenerateTrainingError(ValueError):
    """Training data does not contain both classes (or has no usable weight)."""


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))

    def with_seed(self, seed: int) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, self.hyperparameters, int(seed))


@dataclass
class WeightedTrainSet:
    rows: np.ndarray
    labels: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        self.labels = np.asarray(self.labels).astype(np.int8)
        if self.rows.ndim != 2:
            raise DataError("rows must be a 2-D matrix")
        n = self.rows.shape[0]
        if self.labels.shape != (n,):
            raise DataError(f"{n} rows but {self.labels.shape[0]} labels")
        if not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be binary")
        if self.weights is None:
            self.weights = np.ones(n)
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (n,):
                raise DataError("weights length differs from row count")
            if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
                raise DataError("weights must be finite and nonnegative")

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0])) if len(self) else True


def check_train(data: WeightedTrainSet) -> None:
    if len(data) == 0:
        raise DegenerateTrainingError("empty training set")
    if not np.all(np.isfinite(data.rows)):
        raise DataError("NaN or infinite value in training features")
    present = data.labels[data.weights > 0]
    if present.size == 0 or present.min() == present.max():
        raise DegenerateTrainingError("training data must contain both classes with positive weight")


class TrainedModel:
    """Fitted classifier; ``score`` maps an (n, m) matrix to n defect-proneness scores."""

    spec: ClassifierSpec
    n_features: int

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("NaN or infinite value in scored rows")
        return self._score(X)

    def _score(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.spec.kind!r}, m={self.n_features})"
