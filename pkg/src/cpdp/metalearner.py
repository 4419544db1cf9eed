"""Multi-label meta-learning that recommends a CPDP method for an unseen project.

Meta-examples are datasets described by meta-features; their labels are the
candidate methods that reached the best (rounded) AUC. Binary Relevance turns the
problem into one random forest per label, and the label with the highest
confidence of relevance is recommended.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._rng import derive_seed, rng_for
from .classifiers import ClassifierSpec, WeightedTrainSet, train
from .classifiers.trees import RandomForest
from .data import DefectDataset
from .evaluation.experiment import PerformanceTable
from .metafeatures import MetaFeatureVector

log = logging.getLogger(__name__)

DEFAULT_LABELS = ("2012Ma_nb", "2013He_rf", "2009Turhan_nb", "2013He_svm")
MODEL_FORMAT = "cpdp-metamodel"
MODEL_VERSION = 1


class MetaDataError(ValueError):
    """Meta-data or meta-model inputs are inconsistent."""


@dataclass(frozen=True, eq=False)
class MetaExample:
    features: MetaFeatureVector
    labels: tuple[str, ...]
    project: str
    version: str

    @property
    def name(self) -> str:
        return f"{self.project}-{self.version}"


@dataclass(eq=False)
class MetaDataset:
    examples: list[MetaExample]
    label_universe: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        self.label_universe = tuple(self.label_universe)
        if len(self.label_universe) < 2:
            raise MetaDataError("label universe needs at least two labels")
        if len(set(self.label_universe)) != len(self.label_universe):
            raise MetaDataError("duplicate labels in the universe")
        names = self.examples[0].features.names if self.examples else ()
        for e in self.examples:
            if e.features.names != names:
                raise MetaDataError(f"{e.name}: meta-feature names differ from the first example")
            if not e.labels:
                raise MetaDataError(f"{e.name}: empty label set")
            extra = set(e.labels) - set(self.label_universe)
            if extra:
                raise MetaDataError(f"{e.name}: labels {sorted(extra)} not in the universe")

    @property
    def n(self) -> int:
        return len(self.examples)

    @property
    def c(self) -> int:
        return len(self.label_universe)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.examples[0].features.names if self.examples else ()

    @property
    def X(self) -> np.ndarray:
        return np.vstack([e.features.values for e in self.examples])

    @property
    def Y(self) -> np.ndarray:
        return np.array([[lab in e.labels for lab in self.label_universe] for e in self.examples],
                        dtype=np.int8).reshape(self.n, self.c)

    @property
    def projects(self) -> list[str]:
        return list(dict.fromkeys(e.project for e in self.examples))

    def select(self, keep) -> "MetaDataset":
        return MetaDataset([e for e, k in zip(self.examples, keep) if k], self.label_universe)

    def without_project(self, project: str) -> "MetaDataset":
        return self.select([e.project != project for e in self.examples])

    def of_project(self, project: str) -> "MetaDataset":
        return self.select([e.project == project for e in self.examples])


# ------------------------------------------------------------------ targets

def build_meta_targets(table: PerformanceTable, labels: Sequence[str] = DEFAULT_LABELS
                       ) -> dict[str, tuple[str, ...]]:
    """Per dataset, every label whose rounded AUC equals the row maximum."""
    missing = [lab for lab in labels if lab not in table.methods]
    if missing:
        raise MetaDataError(f"performance table lacks label column(s): {', '.join(missing)}")
    cols = [table.methods.index(lab) for lab in labels]
    out = {}
    for name, row in zip(table.datasets, table.rounded[:, cols]):
        ok = np.isfinite(row)
        if not ok.any():
            log.warning("%s: no defined AUC among the label methods; skipped", name)
            continue
        best = row[ok].max()
        out[name] = tuple(lab for lab, v in zip(labels, row) if v == best)
    return out


def make_meta_dataset(vectors: Sequence[MetaFeatureVector], targets: Mapping[str, Sequence[str]],
                      datasets: Sequence[DefectDataset], labels: Sequence[str] = DEFAULT_LABELS
                      ) -> MetaDataset:
    """Join meta-feature vectors with their targets; ``datasets`` supplies project/version."""
    info = {d.name: (d.project, d.version) for d in datasets}
    examples = []
    for v in vectors:
        if v.source not in targets:
            log.warning("%s: no meta-target; left out of the meta-data", v.source)
            continue
        if v.source not in info:
            raise MetaDataError(f"{v.source}: unknown dataset")
        project, version = info[v.source]
        examples.append(MetaExample(v, tuple(targets[v.source]), project, version))
    return MetaDataset(examples, tuple(labels))


def br_transform(md: MetaDataset) -> list[tuple[np.ndarray, np.ndarray]]:
    """One binary dataset per label: all examples, positive iff the label is relevant."""
    X, Y = md.X, md.Y
    out = []
    for j, lab in enumerate(md.label_universe):
        y = Y[:, j].copy()
        if y.min() == y.max():
            log.info("label %s is single-class in the meta-data", lab)
        out.append((X, y))
    return out


# ------------------------------------------------------------------ preprocessing

def zscore_params(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(X, axis=0) if X.size else np.zeros(X.shape[1])
        sd = np.nanstd(X, axis=0)
    mean = np.where(np.isfinite(mean), mean, 0.0)
    sd = np.where(np.isfinite(sd) & (sd > 0), sd, 1.0)
    return mean, sd


def apply_zscore(X: np.ndarray, mean: np.ndarray, sd: np.ndarray) -> np.ndarray:
    Z = (np.asarray(X, dtype=float) - mean) / sd
    # undefined values land on the training mean
    return np.where(np.isfinite(Z), Z, 0.0)


def oversample(X: np.ndarray, y: np.ndarray, rng: np.random.Generator
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Duplicate minority examples until both classes have equal counts.

    Returns the balanced rows, labels and source indices; the originals come first.
    """
    y = np.asarray(y)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0 or n_pos == n_neg:
        idx = np.arange(len(y))
    else:
        minority = np.flatnonzero(y == (1 if n_pos < n_neg else 0))
        deficit = abs(n_pos - n_neg)
        reps, rest = divmod(deficit, len(minority))
        extra = np.concatenate([np.tile(minority, reps),
                                np.sort(rng.choice(minority, rest, replace=False))])
        idx = np.concatenate([np.arange(len(y)), extra])
    return X[idx], y[idx], idx


def preprocess(train_X, test_X, Y=None, seed: int = 0):
    """z-score both matrices with training parameters; with ``Y`` also return the
    per-label oversampled training sets."""
    train_X = np.asarray(train_X, dtype=float)
    if train_X.shape[0] == 0:
        raise MetaDataError("empty training meta-data")
    mean, sd = zscore_params(train_X)
    Ztr = apply_zscore(train_X, mean, sd)
    Zte = apply_zscore(test_X, mean, sd) if test_X is not None else None
    if Y is None:
        return Ztr, Zte
    Y = np.asarray(Y)
    sets = [oversample(Ztr, Y[:, j], rng_for(seed, "oversample", j))[:2] for j in range(Y.shape[1])]
    return Ztr, Zte, sets


# ------------------------------------------------------------------ model

@dataclass(eq=False)
class MetaModel:
    label_universe: tuple[str, ...]
    selected_features: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    models: list = field(repr=False)
    seed: int = 0
    set_kind: str = "custom"

    def confidences(self, Z: np.ndarray) -> np.ndarray:
        """(n, c) confidences of relevance for already normalized rows."""
        Z = np.atleast_2d(Z)
        out = np.empty((Z.shape[0], len(self.models)))
        for j, m in enumerate(self.models):
            out[:, j] = m if isinstance(m, float) else m.score(Z)
        return out

    def normalize(self, features) -> np.ndarray:
        values = _feature_values(features, self.selected_features)
        return apply_zscore(values[None, :], self.mean, self.sd)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "label_universe": list(self.label_universe),
            "selected_features": list(self.selected_features),
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "seed": self.seed,
            "set_kind": self.set_kind,
            "models": [{"constant": m} if isinstance(m, float)
                       else {"rf": m.to_dict(), "seed": m.spec.seed} for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetaModel":
        if not isinstance(d, Mapping) or d.get("format") != MODEL_FORMAT:
            raise MetaDataError("not a meta-model file")
        if d.get("version") != MODEL_VERSION:
            raise MetaDataError(f"unsupported meta-model version {d.get('version')!r}")
        try:
            models = []
            for m in d["models"]:
                if "constant" in m:
                    models.append(float(m["constant"]))
                else:
                    models.append(RandomForest.from_dict(ClassifierSpec("rf", seed=int(m["seed"])),
                                                         m["rf"]))
            model = cls(tuple(d["label_universe"]), tuple(d["selected_features"]),
                        np.asarray(d["mean"], dtype=float), np.asarray(d["sd"], dtype=float),
                        models, int(d.get("seed", 0)), str(d.get("set_kind", "custom")))
        except (KeyError, TypeError, ValueError) as exc:
            raise MetaDataError(f"malformed meta-model: {exc}") from exc
        k = len(model.selected_features)
        if len(model.models) != len(model.label_universe) or model.mean.shape != (k,) \
                or model.sd.shape != (k,):
            raise MetaDataError("malformed meta-model: inconsistent sizes")
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MetaModel":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MetaDataError(f"cannot read meta-model {path}: {exc}") from exc
        return cls.from_dict(d)


def _feature_values(features, names: Sequence[str]) -> np.ndarray:
    lookup = features.as_dict() if isinstance(features, MetaFeatureVector) else dict(features)
    missing = [n for n in names if n not in lookup]
    if missing:
        raise MetaDataError(f"missing meta-feature(s): {', '.join(missing)}")
    return np.array([float(lookup[n]) for n in names])


def train_meta(md: MetaDataset, feature_subset: Sequence[str], seed: int = 0,
               trace: list | None = None, purpose: str = "train") -> MetaModel:
    """One random forest per label on its oversampled Binary Relevance set.

    A label that is single-class, or training data without any varying feature,
    gets a constant confidence equal to the label's frequency (this covers a
    single training example too).
    """
    if md.n < 1:
        raise MetaDataError("no training meta-examples")
    subset = tuple(feature_subset)
    if not subset:
        raise MetaDataError("empty feature subset")
    names = md.feature_names
    missing = [f for f in subset if f not in names]
    if missing:
        raise MetaDataError(f"missing meta-feature(s): {', '.join(missing)}")
    if trace is not None:
        trace.append((purpose, tuple(e.name for e in md.examples), tuple(md.projects)))
    X = md.X[:, [names.index(f) for f in subset]]
    Y = md.Y
    mean, sd = zscore_params(X)
    Z, _, sets = preprocess(X, None, Y, seed)
    informative = bool(np.any(np.ptp(Z, axis=0) > 0))
    models: list = []
    for j, lab in enumerate(md.label_universe):
        Xj, yj = sets[j]
        prior = float(Y[:, j].mean())
        if not informative or yj.min() == yj.max():
            models.append(prior)
            continue
        spec = ClassifierSpec("rf", seed=derive_seed(seed, "meta-rf", lab))
        models.append(train(spec, WeightedTrainSet(Xj, yj)))
    kind = md.examples[0].features.set_kind
    return MetaModel(md.label_universe, subset, mean, sd, models, seed, kind)


def argmax_label(conf: Sequence[float], labels: Sequence[str]) -> str:
    """Highest confidence; the first label in universe order wins ties."""
    return labels[int(np.argmax(np.asarray(conf)))]


def recommend(model: MetaModel, features) -> tuple[str, np.ndarray]:
    conf = model.confidences(model.normalize(features))[0]
    return argmax_label(conf, model.label_universe), conf


def one_error(predictions: Sequence[str], truth: Sequence[Sequence[str]]) -> float:
    if len(predictions) != len(truth):
        raise ValueError("predictions and truth differ in length")
    if not predictions:
        return 0.0
    misses = sum(p not in set(t) for p, t in zip(predictions, truth))
    return misses / len(predictions)


def accuracy(predictions: Sequence[str], truth: Sequence[Sequence[str]]) -> float:
    return 1.0 - one_error(predictions, truth)


def majority_baseline(md: MetaDataset) -> str:
    counts = md.Y.sum(axis=0)
    return md.label_universe[int(np.argmax(counts))]


def majority_accuracy(md: MetaDataset, label: str | None = None) -> float:
    label = majority_baseline(md) if label is None else label
    return float(np.mean([label in e.labels for e in md.examples])) if md.n else 0.0


def random_baseline(table: PerformanceTable, labels: Sequence[str] = DEFAULT_LABELS,
                    repeats: int = 30, seed: int = 0) -> np.ndarray:
    """Per dataset, mean AUC over ``repeats`` uniformly drawn labels (independent per dataset)."""
    cols = [table.methods.index(lab) for lab in labels]
    out = np.empty(len(table.datasets))
    for i, name in enumerate(table.datasets):
        draws = rng_for(seed, "random-baseline", name).integers(0, len(cols), repeats)
        out[i] = table.auc[i, [cols[d] for d in draws]].mean()
    return out


# ------------------------------------------------------------------ wrapper selection

def _cploo_predictions(md: MetaDataset, subset: Sequence[str], seed: int,
                       trace: list | None = None, purpose: str = "wrapper") -> list[str]:
    """Leave-one-project-out recommendations for every example, in example order."""
    preds: dict[int, str] = {}
    key = ",".join(subset)
    for p in md.projects:
        train_md = md.without_project(p)
        model = train_meta(train_md, subset, derive_seed(seed, p, key), trace, purpose)
        for i, e in enumerate(md.examples):
            if e.project == p:
                preds[i] = recommend(model, e.features)[0]
    return [preds[i] for i in range(md.n)]


def subset_accuracy(md: MetaDataset, subset: Sequence[str], seed: int = 0,
                    trace: list | None = None) -> float:
    preds = _cploo_predictions(md, subset, seed, trace)
    return accuracy(preds, [e.labels for e in md.examples])


def _subset_task(args) -> float:
    md, subset, seed = args
    return subset_accuracy(md, subset, seed)


@dataclass
class WrapperResult:
    subset: tuple[str, ...]
    accuracy: float
    evaluated: int
    history: list[tuple[tuple[str, ...], float]] = field(repr=False, default_factory=list)


def best_first_wrapper(md: MetaDataset, seed: int = 0, max_stale: int = 5, max_size: int = 10,
                       jobs: int = 1, trace: list | None = None,
                       candidates: Sequence[str] | None = None) -> WrapperResult:
    """Forward best-first search scored by leave-one-project-out accuracy.

    Search stops after ``max_stale`` consecutive expansions without a strictly
    better accuracy. Equal accuracies prefer the smaller subset, then the one
    whose features come first in meta-feature order.
    """
    if len(md.projects) < 2:
        raise MetaDataError("wrapper selection needs at least two projects")
    names = list(md.feature_names if candidates is None else candidates)
    cache: dict[tuple[int, ...], float] = {}
    history = []

    def key(sub):
        return (-cache[sub], len(sub), sub)

    def evaluate(subs, ex):
        subs = [s for s in subs if s not in cache]
        args = [(md, tuple(names[i] for i in s), seed) for s in subs]
        if ex is not None and len(subs) > 1:
            if trace is not None:
                log.debug("trace is not collected from worker processes")
            results = list(ex.map(_subset_task, args))
        else:
            results = [subset_accuracy(a[0], a[1], a[2], trace) for a in args]
        for s, acc in zip(subs, results):
            cache[s] = acc
            history.append((tuple(names[i] for i in s), acc))

    ex = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        open_list: list[tuple[int, ...]] = [()]
        expanded: set[tuple[int, ...]] = set()
        best: tuple[int, ...] | None = None
        stale = 0
        while open_list and stale < max_stale:
            parent = min(open_list, key=lambda s: key(s) if s else (0.0, 0, s))
            open_list.remove(parent)
            expanded.add(parent)
            if len(parent) >= max_size:
                stale += 1
                continue
            children = sorted({tuple(sorted(parent + (j,))) for j in range(len(names))
                               if j not in parent})
            fresh = [c for c in children if c not in cache]
            evaluate(fresh, ex)
            open_list.extend(c for c in fresh if c not in expanded)
            improved = False
            for c in sorted(children, key=key):
                if best is None or cache[c] > cache[best] + 1e-12:
                    best, improved = c, True
                elif abs(cache[c] - cache[best]) <= 1e-12 and key(c) < key(best):
                    best = c
            stale = 0 if improved else stale + 1
    finally:
        if ex is not None:
            ex.shutdown()
    if best is None:
        raise MetaDataError("no feature subset could be evaluated")
    return WrapperResult(tuple(names[i] for i in best), cache[best], len(cache), history)


# ------------------------------------------------------------------ meta-CPLOO

@dataclass
class FoldResult:
    project: str
    subset: tuple[str, ...]
    estimated_accuracy: float
    majority_label: str
    majority_accuracy: float
    n_train: int


@dataclass
class Recommendation:
    dataset: str
    project: str
    label: str
    confidences: np.ndarray
    relevant: tuple[str, ...]
    correct: bool
    auc: float | None = None
    majority_label: str | None = None
    majority_auc: float | None = None


@dataclass
class MetaCplooResult:
    label_universe: tuple[str, ...]
    folds: list[FoldResult]
    recommendations: list[Recommendation]
    # (held-out project, [(purpose, training example names, training projects), ...])
    trace: list = field(repr=False, default_factory=list)

    @property
    def n_correct(self) -> int:
        return sum(r.correct for r in self.recommendations)

    @property
    def accuracy(self) -> float:
        return self.n_correct / len(self.recommendations) if self.recommendations else 0.0

    def achieved_auc(self, datasets: Sequence[str]) -> np.ndarray:
        by = {r.dataset: r.auc for r in self.recommendations}
        return np.array([by.get(d, np.nan) if by.get(d) is not None else np.nan
                         for d in datasets], dtype=float)


def meta_cploo(md: MetaDataset, table: PerformanceTable | None = None, seed: int = 0,
               jobs: int = 1, max_stale: int = 5, max_size: int = 10) -> MetaCplooResult:
    """Hold out each project in turn: select features and train on the remaining
    projects only, then recommend a method for each held-out version."""
    if len(md.projects) < 2:
        raise MetaDataError("meta-CPLOO needs at least two projects")
    trace: list = []
    folds, recs = [], []
    for p in md.projects:
        train_md = md.without_project(p)
        test_md = md.of_project(p)
        fold_seed = derive_seed(seed, "meta-cploo", p)
        fold_trace: list = []
        trace.append((p, fold_trace))
        if len(train_md.projects) >= 2:
            wr = best_first_wrapper(train_md, fold_seed, max_stale, max_size, jobs,
                                    fold_trace if jobs <= 1 else None)
            subset, est = wr.subset, wr.accuracy
        else:
            subset, est = train_md.feature_names, float("nan")
        model = train_meta(train_md, subset, fold_seed, fold_trace, purpose="final")
        maj = majority_baseline(train_md)
        folds.append(FoldResult(p, subset, est, maj, majority_accuracy(train_md, maj), train_md.n))
        for e in test_md.examples:
            label, conf = recommend(model, e.features)
            rec = Recommendation(e.name, p, label, conf, e.labels, label in e.labels,
                                 majority_label=maj)
            if table is not None and e.name in table.datasets:
                i = table.datasets.index(e.name)
                rec.auc = float(table.auc[i, table.methods.index(label)])
                rec.majority_auc = float(table.auc[i, table.methods.index(maj)])
            recs.append(rec)
        log.info("meta-CPLOO %s: subset %s, estimated accuracy %.3f", p, ",".join(subset), est)
    return MetaCplooResult(md.label_universe, folds, recs, trace)


def general_performance(table: PerformanceTable, result: MetaCplooResult, set_name: str,
                        seed: int = 0, repeats: int = 30) -> PerformanceTable:
    """Base-level AUC table: meta recommendation, the label methods, majority and random."""
    labels = list(result.label_universe)
    datasets = [r.dataset for r in result.recommendations if r.dataset in table.datasets]
    base = table.subset(labels, datasets)
    by = {r.dataset: r for r in result.recommendations}
    meta = np.array([by[d].auc for d in datasets], dtype=float)
    majority = np.array([by[d].majority_auc for d in datasets], dtype=float)
    rnd = random_baseline(base, labels, repeats, seed)
    out = PerformanceTable(datasets, [f"Meta_{set_name}"], meta[:, None])
    return out.with_columns({**{lab: base.column(lab) for lab in labels},
                             "Majority": majority, "Random": rnd})


def frequency_best_worst(table: PerformanceTable) -> tuple[np.ndarray, np.ndarray]:
    """How often each column attains the row maximum / minimum of the rounded AUCs."""
    rows = table.rounded[table.complete]
    best = (rows == rows.max(axis=1, keepdims=True)).sum(axis=0)
    worst = (rows == rows.min(axis=1, keepdims=True)).sum(axis=0)
    return best, worst
