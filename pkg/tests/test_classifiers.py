import numpy as np
import pytest

from cpdp.classifiers import (ClassifierSpec, DataError, DegenerateTrainingError,
                              WeightedTrainSet, score, separability_accuracy, train)
from cpdp.classifiers.trees import RandomForest, default_max_features
from cpdp.evaluation import auc

KINDS = ["nb", "rf", "c45", "svm", "mlp", "logistic"]


def separable_2d(n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    X[y == 1] += 0.3
    X[y == 0] -= 0.3
    return X, y


def noisy(n=200, m=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, m))
    y = (X[:, 0] + rng.normal(size=n) > 0).astype(int)
    return X, y


def test_nb_four_point_oracle():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    m = train(ClassifierSpec("nb"), WeightedTrainSet(X, [0, 0, 1, 1]))
    assert score(m, [10.5]) > score(m, [0.5])
    # both classes share sigma 0.5 and equal priors, so the midpoint is undecided
    assert score(m, [5.5]) == pytest.approx(0.5, abs=1e-12)


def test_nb_uniform_weights_match_unweighted():
    X, y = noisy()
    a = train(ClassifierSpec("nb"), WeightedTrainSet(X, y)).score(X)
    b = train(ClassifierSpec("nb"), WeightedTrainSet(X, y, np.full(len(y), 3.7))).score(X)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_nb_weight_homogeneity():
    X, y = noisy()
    w = np.random.default_rng(1).uniform(0.1, 2, len(y))
    a = train(ClassifierSpec("nb"), WeightedTrainSet(X, y, w)).score(X)
    b = train(ClassifierSpec("nb"), WeightedTrainSet(X, y, 5 * w)).score(X)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_nb_scale_invariance():
    X, y = noisy()
    scale = np.array([1e-3, 2.0, 7.0, 1.0, 300.0])
    a = train(ClassifierSpec("nb"), WeightedTrainSet(X, y)).score(X)
    b = train(ClassifierSpec("nb"), WeightedTrainSet(X * scale, y)).score(X * scale)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_nb_weights_change_the_model():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    plain = train(ClassifierSpec("nb"), WeightedTrainSet(X, [0, 0, 1, 1]))
    heavy = train(ClassifierSpec("nb"), WeightedTrainSet(X, [0, 0, 1, 1], [1, 1, 10, 10]))
    assert score(heavy, [5.5]) > score(plain, [5.5])


@pytest.mark.parametrize("kind", KINDS)
def test_training_auc_on_separable_toy(kind):
    X, y = separable_2d()
    s = train(ClassifierSpec(kind, seed=3), WeightedTrainSet(X, y)).score(X)
    assert auc(s, y) >= (0.95 if kind == "mlp" else 1.0)


@pytest.mark.parametrize("kind", KINDS)
def test_deterministic_given_seed(kind):
    X, y = noisy(120)
    probe = np.random.default_rng(9).normal(size=(30, 5))
    a = train(ClassifierSpec(kind, seed=5), WeightedTrainSet(X, y)).score(probe)
    b = train(ClassifierSpec(kind, seed=5), WeightedTrainSet(X, y)).score(probe)
    np.testing.assert_array_equal(a, b)


def test_rf_single_stump_separates_1d():
    X = np.arange(10.0)[:, None]
    y = (X[:, 0] >= 5).astype(int)
    spec = ClassifierSpec("rf", {"n_trees": 1, "max_depth": 1}, seed=0)
    # bootstrap may miss the boundary, but any learned threshold still orders the data
    assert auc(train(spec, WeightedTrainSet(X, y)).score(X), y) == 1.0


def test_c45_pure_leaf_scores_one():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [10.0], [11.0], [12.0], [13.0], [14.0]])
    y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])
    m = train(ClassifierSpec("c45"), WeightedTrainSet(X, y))
    assert score(m, [12.0]) == 1.0
    assert score(m, [1.0]) == 0.0


def test_rf_defaults_and_serialization():
    X, y = noisy(150, 20)
    m = train(ClassifierSpec("rf", seed=2), WeightedTrainSet(X, y))
    assert m.n_trees == 100
    assert default_max_features(20) == 5
    votes = m.score(X)
    assert np.all((votes >= 0) & (votes <= 1))
    back = RandomForest.from_dict(m.spec, m.to_dict())
    np.testing.assert_array_equal(back.score(X), votes)


def test_weights_rejected_by_unweighted_kinds():
    X, y = noisy(40)
    with pytest.raises(ValueError, match="weights"):
        train(ClassifierSpec("rf"), WeightedTrainSet(X, y, np.arange(40.0) + 1))


def test_degenerate_and_malformed_training_data():
    X, _ = noisy(10)
    with pytest.raises(DegenerateTrainingError):
        train(ClassifierSpec("nb"), WeightedTrainSet(X, np.zeros(10)))
    with pytest.raises(DegenerateTrainingError):
        train(ClassifierSpec("nb"), WeightedTrainSet(X, [0] * 5 + [1] * 5, [1] * 5 + [0] * 5))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(DataError):
        train(ClassifierSpec("nb"), WeightedTrainSet(bad, [0, 1] * 5))
    with pytest.raises(DataError):
        WeightedTrainSet(X, [0, 1, 2] + [0] * 7)
    with pytest.raises(ValueError):
        ClassifierSpec("knn")


def test_score_checks_width():
    X, y = noisy(40)
    m = train(ClassifierSpec("logistic"), WeightedTrainSet(X, y))
    with pytest.raises(DataError):
        m.score(np.zeros((2, 4)))


def test_svm_matches_reference_solver_ordering():
    from sklearn.svm import SVC

    X, y = noisy(300, 4, seed=4)
    ours = train(ClassifierSpec("svm", seed=1), WeightedTrainSet(X, y)).score(X)
    lo, hi = X.min(axis=0), X.max(axis=0)
    ref = SVC(kernel="linear", C=1.0, tol=1e-6).fit((X - lo) / (hi - lo), y)
    theirs = ref.decision_function((X - lo) / (hi - lo))
    assert np.corrcoef(ours, theirs)[0, 1] > 0.999


def test_separability_identical_and_shuffled_sources():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(600, 20))
    assert abs(separability_accuracy(a, a.copy(), seed=1) - 0.5) <= 0.1
    shuffled = a[rng.permutation(len(a))]
    assert abs(separability_accuracy(a, shuffled, seed=1) - 0.5) <= 0.1


def test_separability_separated_sources():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(100, 5))
    b = rng.normal(size=(100, 5))
    b[:, 2] += 20
    assert separability_accuracy(a, b) >= 0.95
    with pytest.raises(DataError):
        separability_accuracy(a, b[:, :4])
