import json

import numpy as np
import pytest

from conftest import custom_vector, planted_meta_data
from cpdp.evaluation import PerformanceTable
from cpdp.metalearner import (MetaDataError, MetaDataset, MetaExample, MetaModel, accuracy,
                              argmax_label, best_first_wrapper, br_transform, build_meta_targets,
                              general_performance, majority_accuracy, majority_baseline,
                              meta_cploo, one_error, oversample, preprocess, random_baseline,
                              recommend, subset_accuracy, train_meta)

LABELS = ("A", "B", "C", "D")


def meta(rows, labels, projects=None, universe=LABELS, names=None):
    rows = np.asarray(rows, float)
    names = names or [f"f{j}" for j in range(rows.shape[1])]
    projects = projects or [f"p{i}" for i in range(len(rows))]
    ex = [MetaExample(custom_vector(r, names, f"{p}-{i}"), tuple(lab), p, str(i))
          for i, (r, lab, p) in enumerate(zip(rows, labels, projects))]
    return MetaDataset(ex, universe)


def test_targets_keep_ties():
    t = PerformanceTable(["d"], list(LABELS), [[0.80, 0.80, 0.70, 0.60]])
    assert build_meta_targets(t, LABELS) == {"d": ("A", "B")}
    t = PerformanceTable(["d"], list(LABELS), [[0.801, 0.804, 0.70, 0.60]])
    assert build_meta_targets(t, LABELS)["d"] == ("A", "B")
    with pytest.raises(MetaDataError):
        build_meta_targets(t, ("A", "Z"))


def test_dataset_validation():
    with pytest.raises(MetaDataError):
        meta([[1.0]], [("Z",)])
    with pytest.raises(MetaDataError):
        meta([[1.0]], [()])
    with pytest.raises(MetaDataError):
        meta([[1.0]], [("A",)], universe=("A",))


def test_br_transform_counts():
    md = meta(np.arange(10.0)[:, None], [("A",)] * 6 + [("A", "B")] * 3 + [("C",)])
    sets = br_transform(md)
    assert len(sets) == 4
    assert [int(y.sum()) for _, y in sets] == [9, 3, 1, 0]
    assert all(len(y) == 10 for _, y in sets)


def test_preprocess_uses_training_statistics():
    train_X = np.array([[3.0], [7.0]])
    Ztr, Zte = preprocess(train_X, np.array([[9.0], [np.nan]]))
    assert Ztr.ravel().tolist() == [-1.0, 1.0]
    assert Zte.ravel().tolist() == [2.0, 0.0]
    const, _ = preprocess(np.ones((3, 1)), None)
    assert np.all(const == 0)


def test_oversample_balances_classes():
    y = np.array([1] * 12 + [0] * 32)
    X = np.arange(44.0)[:, None]
    Xb, yb, idx = oversample(X, y, np.random.default_rng(0))
    assert (yb == 1).sum() == (yb == 0).sum() == 32
    assert np.array_equal(idx[:44], np.arange(44))
    assert set(idx[44:]) <= set(range(12))
    np.testing.assert_array_equal(Xb[:, 0], X[idx, 0])
    # deficit 20 over 12 positives: one full tile plus 8 distinct extras
    counts = np.bincount(idx[44:], minlength=12)
    assert counts.min() == 1 and (counts == 2).sum() == 8


def test_train_meta_shapes_and_memorization():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    labels = [("A",) if x[0] > 0 else ("B",) for x in X]
    md = meta(X, labels)
    model = train_meta(md, ["f0", "f1"], seed=1)
    assert len(model.models) == 4
    conf = model.confidences(model.normalize(md.examples[0].features))
    assert conf.shape == (1, 4)
    # labels C and D never occur, so they carry prior 0
    assert conf[0, 2] == conf[0, 3] == 0.0
    preds = [recommend(model, e.features)[0] for e in md.examples]
    assert accuracy(preds, [e.labels for e in md.examples]) >= 0.95


def test_planted_rule_is_learned_out_of_project():
    md, signal = planted_meta_data(n=60, noise=4, n_projects=10, seed=2)
    assert subset_accuracy(md, [signal], seed=0) >= 0.9
    noise_only = [f for f in md.feature_names if f != signal]
    assert subset_accuracy(md, noise_only, seed=0) < 0.9


def test_argmax_and_recommend():
    assert argmax_label([0.2, 0.9, 0.4, 0.4], LABELS) == "B"
    assert argmax_label([0.5, 0.5, 0.5, 0.5], LABELS) == "A"
    assert argmax_label([0.1, 0.3, 0.3, 0.0], LABELS) == "B"
    md = meta([[0.0], [1.0]], [("A",), ("B",)])
    model = train_meta(md, ["f0"])
    with pytest.raises(MetaDataError, match="f0"):
        recommend(model, {"other": 1.0})


def test_one_error_values():
    truth = [("A",)] * 25 + [("B",)] * 22
    preds = ["A"] * 47
    assert one_error(preds, truth) == pytest.approx(22 / 47)
    assert accuracy(preds, truth) == pytest.approx(25 / 47)
    assert one_error(["A", "B"], [("A", "B"), ("A", "B")]) == 0.0
    with pytest.raises(ValueError):
        one_error(["A"], [])


def test_majority_baseline():
    md = meta(np.zeros((5, 1)), [("B",), ("B", "A"), ("C",), ("B",), ("A",)])
    assert majority_baseline(md) == "B"
    assert majority_accuracy(md) == pytest.approx(3 / 5)
    tie = meta(np.zeros((2, 1)), [("C",), ("A",)])
    assert majority_baseline(tie) == "A"


def test_constant_features_give_majority_rate():
    labels = [("B",)] * 6 + [("A",)] * 3 + [("C",)]
    md = meta(np.ones((10, 2)), labels, projects=[f"p{i % 5}" for i in range(10)])
    assert subset_accuracy(md, ["f0", "f1"]) == pytest.approx(majority_accuracy(md))


def test_random_baseline():
    t = PerformanceTable(["a", "b"], list(LABELS), [[0.7] * 4, [0.6, 0.7, 0.8, 0.9]])
    base = random_baseline(t, LABELS, repeats=30, seed=3)
    assert base[0] == pytest.approx(0.7)
    assert 0.6 <= base[1] <= 0.9
    one = random_baseline(t, LABELS, repeats=1, seed=3)
    assert one[1] in (0.6, 0.7, 0.8, 0.9)
    np.testing.assert_array_equal(one, random_baseline(t, LABELS, repeats=1, seed=3))


def test_model_json_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 2))
    md = meta(X, [("A",) if x[0] > 0 else ("B", "C") for x in X])
    model = train_meta(md, ["f1", "f0"], seed=2)
    model.save(tmp_path / "m.json")
    back = MetaModel.load(tmp_path / "m.json")
    assert back.selected_features == ("f1", "f0")
    for e in md.examples:
        np.testing.assert_array_equal(recommend(back, e.features)[1], recommend(model, e.features)[1])
    d = json.loads((tmp_path / "m.json").read_text())
    d["version"] = 99
    (tmp_path / "bad.json").write_text(json.dumps(d))
    with pytest.raises(MetaDataError, match="version"):
        MetaModel.load(tmp_path / "bad.json")
    (tmp_path / "junk.json").write_text("{not json")
    with pytest.raises(MetaDataError):
        MetaModel.load(tmp_path / "junk.json")


def test_wrapper_beats_or_matches_first_single_feature():
    md, signal = planted_meta_data(n=40, noise=5, n_projects=8, seed=5)
    res = best_first_wrapper(md, seed=1, max_stale=2)
    singles = {s[0]: acc for s, acc in res.history if len(s) == 1}
    assert len(singles) == len(md.feature_names)
    assert res.accuracy >= max(singles.values())
    assert signal in res.subset
    assert 1 <= len(res.subset) <= 10


def test_wrapper_respects_size_cap():
    md, _ = planted_meta_data(n=20, noise=3, n_projects=5, seed=6)
    res = best_first_wrapper(md, seed=0, max_stale=3, max_size=1)
    assert len(res.subset) == 1
    assert all(len(s) == 1 for s, _ in res.history)


def test_meta_cploo_and_general_performance():
    md, _ = planted_meta_data(n=24, noise=2, n_projects=4, seed=7, labels=("A", "B"))
    names = [e.name for e in md.examples]
    rng = np.random.default_rng(0)
    table = PerformanceTable(names, ["A", "B"], rng.uniform(0.5, 0.9, (24, 2)))
    res = meta_cploo(md, table, seed=0, max_stale=2)
    assert len(res.recommendations) == 24
    assert len(res.folds) == 4
    assert res.n_correct == sum(r.label in r.relevant for r in res.recommendations)
    perf = general_performance(table, res, "Toy", seed=0)
    assert perf.methods == ["Meta_Toy", "A", "B", "Majority", "Random"]
    for r in res.recommendations:
        i = table.datasets.index(r.dataset)
        assert r.auc == table.auc[i, table.methods.index(r.label)]
