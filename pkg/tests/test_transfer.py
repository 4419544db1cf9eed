import math

import numpy as np
import pytest

from cpdp.classifiers import ClassifierSpec, WeightedTrainSet, train
from cpdp.data import CrossProjectPool, DefectDataset, build_pool, log_transform
from cpdp.evaluation import auc
from cpdp.synthetic import make_dataset
from cpdp.transfer import (CpdpMethod, HeMember, HeParams, MethodError, all_methods,
                           cruz_transform, he_predict, he_select, herbold_filter, herbold_select,
                           information_gain, ma_weights, run_method, turhan_filter,
                           watanabe_transform)


def ds(project, n=60, seed=0, shift=0.0, rate=0.3):
    return log_transform(make_dataset(project, "1", n, seed, shift, rate))


def pool_of(*datasets, held_out="target"):
    return CrossProjectPool(tuple(datasets), held_out)


def test_method_grid():
    ids = [m.id for m in all_methods()]
    assert len(ids) == 31 == len(set(ids))
    assert "2012Ma_nb" in ids and "2008Watanabe_c45" in ids and "orig_rf" in ids
    assert all(CpdpMethod.parse(i).id == i for i in ids)
    with pytest.raises(ValueError):
        CpdpMethod("ma2012", "rf")
    with pytest.raises(ValueError):
        CpdpMethod.parse("2020Nobody_nb")


def test_watanabe_examples():
    train = np.array([[3.0, 1.0], [3.0, 1.0]])
    test = np.array([[2.0, 1.0], [2.0, 1.0]])
    out = watanabe_transform(test, train)
    assert out[0, 0] == 3.0
    np.testing.assert_array_equal(watanabe_transform(train, train), train)
    np.testing.assert_allclose(watanabe_transform(test, 2 * train), 2 * out)


def test_watanabe_zero_mean_column_passes_through(caplog):
    test = np.array([[0.0, 1.0], [0.0, 3.0]])
    out = watanabe_transform(test, np.array([[5.0, 2.0]]))
    assert out[:, 0].tolist() == [0.0, 0.0]
    assert "zero mean" in caplog.text


def test_cruz_examples():
    train = np.array([[1.0], [2.0], [3.0]])
    test = np.array([[3.0], [4.0], [5.0]])
    out = cruz_transform(test, train)
    assert out[2, 0] == 3.0
    np.testing.assert_array_equal(cruz_transform(train, train), train)
    assert np.array_equal(np.argsort(out[:, 0]), np.argsort(test[:, 0]))


def test_transforms_leave_training_data_alone():
    X = np.random.default_rng(0).uniform(1, 5, (20, 3))
    before = X.copy()
    watanabe_transform(X[:5], X)
    cruz_transform(X[:5], X)
    np.testing.assert_array_equal(X, before)


def test_turhan_small_pool_and_duplicates():
    pool_rows = np.arange(7 * 20, dtype=float).reshape(7, 20)
    d = DefectDataset("a", "1", pool_rows, [0, 1] * 3 + [0])
    t = DefectDataset("target", "1", pool_rows[:2] + 0.1, [0, 1])
    assert len(turhan_filter(t, pool_of(d), k=10)) == 7
    single = turhan_filter(DefectDataset("target", "1", pool_rows[3:4] + 0.2, [1]), pool_of(d), 1)
    np.testing.assert_array_equal(single.rows, pool_rows[3:4])
    twin = DefectDataset("target", "1", np.vstack([pool_rows[3], pool_rows[3]]) + 0.2, [1, 1])
    np.testing.assert_array_equal(turhan_filter(twin, pool_of(d), 1).rows, single.rows)


def test_turhan_output_is_pool_subset():
    a, b, t = ds("a", 80, 1), ds("b", 90, 2), ds("target", 12, 3)
    out = turhan_filter(t, pool_of(a, b), k=10)
    X, _ = pool_of(a, b).concatenated()
    rows = {tuple(r) for r in X}
    assert all(tuple(r) in rows for r in out.rows)
    assert len(out) <= min(12 * 10, len(X))


def test_herbold_selection_sizes_and_identity():
    pool = [ds(f"p{i}", 40, i, shift=0.3 * i) for i in range(42)]
    target = DefectDataset("target", "1", pool[17].rows, pool[17].bug_counts)
    chosen = herbold_select(target, pool_of(*pool), 0.5)
    assert len(chosen) == 21
    assert 17 in chosen
    assert chosen == sorted(chosen)
    everything = herbold_filter(target, pool_of(*pool), 1.0)
    X, y = pool_of(*pool).concatenated()
    np.testing.assert_array_equal(everything.rows, X)
    np.testing.assert_array_equal(everything.labels, y)


@pytest.mark.parametrize("clf", ["nb", "rf", "c45", "svm", "mlp"])
def test_herbold_full_fraction_equals_orig(clf):
    pool = pool_of(ds("a", 50, 1), ds("b", 60, 2), ds("c", 40, 3))
    t = ds("target", 30, 4)
    a = run_method(CpdpMethod("orig", clf), t, pool, seed=3)
    b = run_method(CpdpMethod("herbold2013", clf), t, pool, seed=3, herbold_fraction=1.0)
    np.testing.assert_array_equal(a, b)


def test_ma_weight_identities():
    test = np.array([[0.0, 0.0], [1.0, 1.0]])
    mw = ma_weights(np.array([[0.5, 0.5], [0.5, 9.0], [9.0, 9.0]]), test)
    assert mw.s.tolist() == [2, 1, 0]
    np.testing.assert_allclose(mw.w, [2.0, 1 / 4, 0.0])
    with pytest.raises(ValueError):
        ma_weights(np.zeros((2, 3)), test)


def test_information_gain_bounds():
    rng = np.random.default_rng(0)
    src = np.repeat([0, 1], 100)
    assert information_gain(np.concatenate([np.zeros(100), np.ones(100)]), src) == pytest.approx(1.0)
    assert information_gain(np.ones(200), src) == pytest.approx(0.0)
    g = information_gain(rng.normal(size=200), src)
    assert 0.0 <= g <= 1.0


def test_he_select_counts_and_attributes():
    pool = [ds(f"p{i}", 50, i, shift=0.5 * (i % 4)) for i in range(12)]
    t = ds("target", 40, 99)
    members = he_select(t, pool_of(*pool), HeParams(N=10), seed=1)
    assert len(members) == 10
    assert all(len(m.attributes) == 20 - math.floor(0.8 * 20) == 4 for m in members)
    assert [m.separability for m in members] == sorted(m.separability for m in members)
    assert len(he_select(t, pool_of(*pool[:3]), HeParams(N=10), seed=1)) == 3


def test_he_select_prefers_identical_dataset():
    pool = [ds(f"p{i}", 200, i, shift=3.0 + i) for i in range(5)]
    t = ds("target", 200, 50)
    twin = DefectDataset("twin", "1", t.rows, t.bug_counts)
    members = he_select(t, pool_of(*pool, twin), HeParams(N=3), seed=2)
    assert members[0].dataset.name == "twin-1"


def test_he_predict_ensemble_mean():
    a, t = ds("a", 60, 1), ds("target", 25, 2)
    m = HeMember(a, tuple(range(20)), 0.5, np.zeros(20))
    spec = ClassifierSpec("nb")
    one = he_predict([m], t, spec)
    ref = train(spec, WeightedTrainSet(a.rows, a.labels)).score(t.rows)
    np.testing.assert_allclose(one, ref)
    np.testing.assert_allclose(he_predict([m, m], t, spec), ref)
    dead = HeMember(DefectDataset("d", "1", a.rows, np.zeros(a.n)), tuple(range(20)), 0.5,
                    np.zeros(20))
    np.testing.assert_allclose(he_predict([m, dead], t, spec), ref)
    with pytest.raises(MethodError):
        he_predict([dead], t, spec)


@pytest.mark.parametrize("method", [m.id for m in all_methods()])
def test_every_method_runs_and_is_deterministic(method):
    coll = [ds("a", 50, 1), ds("b", 45, 2, shift=0.4), ds("target", 30, 3, shift=-0.3)]
    pool = build_pool(coll, coll[2])
    m = CpdpMethod.parse(method)
    s1 = run_method(m, coll[2], pool, seed=4)
    s2 = run_method(m, coll[2], pool, seed=4)
    assert s1.shape == (30,)
    assert np.all(np.isfinite(s1))
    np.testing.assert_array_equal(s1, s2)


def test_self_similar_pool_gives_high_auc():
    t = ds("target", 150, 5, rate=0.3)
    twin = DefectDataset("twin", "1", t.rows, t.bug_counts)
    s = run_method(CpdpMethod("orig", "rf"), t, pool_of(twin), seed=0)
    assert auc(s, t.labels) >= 0.9
