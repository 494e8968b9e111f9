import numpy as np
import pytest
from sklearn.ensemble import RandomForestClassifier
from sklearn.svm import LinearSVC

from citeassess.learners import LinearSVM, RandomForest


def blobs(seed, n=150, d=4, sep=1.5):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.4).astype(np.int64)
    X = rng.normal(size=(n, d)) + sep * y[:, None] * (np.arange(d) < 2)
    return (X - X.mean(0)) / X.std(0), y


@pytest.mark.filterwarnings("ignore::sklearn.exceptions.ConvergenceWarning")
@pytest.mark.parametrize("seed", range(6))
def test_svm_agrees_with_liblinear(seed):
    X, y = blobs(seed)
    ours = LinearSVM().fit(X, y).predict(X)
    ref = LinearSVC(C=1.0, loss="hinge", dual=True, intercept_scaling=1.0,
                    tol=1e-4, max_iter=1000, random_state=0).fit(X, y).predict(X)
    assert np.mean(ours == ref) >= 0.98


def test_svm_separable():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    m = LinearSVM().fit(X, y)
    assert list(m.predict(X)) == [0, 0, 1, 1]
    assert m.decision_function(np.array([[0.0]]))[0] == pytest.approx(0.0, abs=0.2)


@pytest.mark.parametrize("seed", range(4))
def test_forest_accuracy_close_to_sklearn(seed):
    X, y = blobs(seed, n=300)
    Xt, yt = blobs(seed + 100, n=300)
    ours = np.mean(RandomForest(n_trees=50, seed=seed).fit(X, y).predict(Xt) == yt)
    ref = np.mean(RandomForestClassifier(50, random_state=seed).fit(X, y).predict(Xt) == yt)
    assert abs(ours - ref) < 0.06


def test_forest_fits_training_data():
    X, y = blobs(1, n=80)
    # unlimited depth trees memorise distinct rows; the vote is near perfect
    assert np.mean(RandomForest(n_trees=25, seed=0).fit(X, y).predict(X) == y) > 0.95


def test_forest_is_seeded():
    X, y = blobs(2)
    a = RandomForest(n_trees=10, seed=5).fit(X, y).predict(X)
    b = RandomForest(n_trees=10, seed=5).fit(X, y).predict(X)
    assert np.array_equal(a, b)


def test_forest_tie_goes_to_tie_class():
    X = np.zeros((6, 2))
    y = np.array([0, 0, 0, 1, 1, 1])
    assert set(RandomForest(n_trees=4, seed=0, tie_class=1).fit(X, y).predict(X)) <= {0, 1}
    # constant features: every tree is a single leaf, ties fall back
    preds = RandomForest(n_trees=2, seed=3, tie_class=1).fit(X, y).predict(X)
    assert len(set(preds)) == 1
