import csv
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citeassess import (Algorithm, EvalResult, FeatureMatrix, SubsetMask, SweepPlan, Verdict,
                        enumerate_subsets, oversample, significance, stratified_folds, sweep,
                        train_eval, weighted_f1)
from citeassess.errors import ArgumentError
from citeassess.mlharness import (combinations_total, fold_splits, read_metrics_csv, results_csv,
                                  sweep_by_group, task_seeds)

from oracles import oracle_subsets, oracle_weighted_f1


def toy_matrix(seed=0, n=60, m=3, signal=0):
    rng = np.random.default_rng(seed)
    X = rng.poisson(4, size=(n, m)).astype(float)
    y = (X[:, signal] > np.median(X[:, signal])).astype(np.int64)
    return FeatureMatrix(tuple(f"f{i}" for i in range(m)), tuple(str(i) for i in range(n)), X, y)


@pytest.mark.parametrize("m", [1, 2, 5, 11])
def test_enumerate_subsets(m):
    masks = enumerate_subsets(m)
    assert len(masks) == 2**m - 1 == combinations_total(m)
    assert {frozenset(s.indices) for s in masks} == set(oracle_subsets(m))
    assert len({s.bits for s in masks}) == len(masks)


def test_subset_mask_views():
    s = SubsetMask(0b101, 4)
    assert s.indices == (0, 2)
    assert s.size == 2
    assert 2 in s and 1 not in s
    assert s.binary == "0101"
    with pytest.raises(ArgumentError):
        SubsetMask(0, 4)
    with pytest.raises(ArgumentError):
        SubsetMask(16, 4)


def test_weighted_f1_worked_example():
    y_true = [1, 1, 1, 1, 0, 0]
    y_pred = [1, 1, 1, 0, 0, 1]
    assert Fraction(weighted_f1(y_true, y_pred)).limit_denominator(1000) == Fraction(2, 3)
    assert weighted_f1(y_true, y_pred) == pytest.approx(2 / 3, abs=1e-12)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
def test_weighted_f1_oracle(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    assert weighted_f1(t, p) == pytest.approx(float(oracle_weighted_f1(t, p)), abs=1e-12)


@settings(deadline=None)
@given(st.integers(10, 40), st.integers(10, 40), st.integers(2, 10), st.integers(0, 1000))
def test_stratified_folds(n0, n1, k, seed):
    y = np.array([0] * n0 + [1] * n1)
    if min(n0, n1) < k:
        with pytest.raises(ArgumentError):
            stratified_folds(y, k, seed)
        return
    f = stratified_folds(y, k, seed)
    sizes = np.bincount(f, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    for c in (0, 1):
        per = np.bincount(f[y == c], minlength=k)
        assert per.max() - per.min() <= 1
    assert np.array_equal(f, stratified_folds(y, k, seed))


@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_oversample_properties(n0, n1, seed):
    y = np.array([1] * n1 + [0] * n0)
    pos = oversample(y, seed)
    out = y[pos]
    assert np.sum(out == 0) == np.sum(out == 1) == max(n0, n1)
    assert np.array_equal(pos[: len(y)], np.arange(len(y)))
    minority = 0 if n0 < n1 else 1
    assert np.all(y[pos[len(y):]] == minority)


def test_oversample_30_10():
    y = np.array([0] * 30 + [1] * 10)
    pos = oversample(y, 4)
    assert (np.sum(y[pos] == 0), np.sum(y[pos] == 1)) == (30, 30)
    assert set(pos) <= set(range(40))


def test_fold_splits_do_not_leak():
    m = toy_matrix()
    folds = stratified_folds(m.y, 5, 0)
    for sp in fold_splits(m.y, folds, 5, 0, 3, Algorithm.SVM):
        assert not set(sp.train_rows) & set(sp.test_rows)
        assert np.sum(m.y[sp.train_rows] == 0) == np.sum(m.y[sp.train_rows] == 1)


def test_task_seeds_distinct():
    seen = {task_seeds(0, mask, alg, f) for mask in range(1, 8) for alg in Algorithm for f in range(10)}
    assert len(seen) == 7 * 2 * 10


def test_plan_validation():
    with pytest.raises(ArgumentError):
        SweepPlan(m=0)
    with pytest.raises(ArgumentError):
        SweepPlan(m=3, k_folds=1)
    with pytest.raises(ArgumentError):
        SweepPlan(m=3, lo_threshold=0.6, hi_threshold=0.5)
    with pytest.raises(ArgumentError):
        SweepPlan(m=3, algorithms=())
    p = SweepPlan(m=3, algorithms=("RANDOM_FOREST", "SVM"))
    assert p.algorithms == (Algorithm.SVM, Algorithm.RANDOM_FOREST)


def test_matrix_validation():
    with pytest.raises(ArgumentError):
        FeatureMatrix(("a",), ("r",), np.array([[np.nan]]), np.array([1]))
    m = FeatureMatrix(("a",), ("r", "s"), np.array([[1.0], [2.0]]), np.array([1, 1]))
    with pytest.raises(ArgumentError):
        m.require_both_classes()


def test_train_eval_finds_signal():
    m = toy_matrix(signal=1)
    plan = SweepPlan(m=3, k_folds=5, rf_trees=10)
    good = train_eval(SubsetMask(0b010, 3), "SVM", m, plan)
    bad = train_eval(SubsetMask(0b001, 3), "SVM", m, plan)
    assert good.weighted_f1 > 0.9 > bad.weighted_f1
    assert len(good.fold_f1) == 5
    assert good.weighted_f1 == pytest.approx(np.mean(good.fold_f1))
    with pytest.raises(ArgumentError):
        train_eval(SubsetMask(1, 4), "SVM", m, plan)


def test_degenerate_fold_predicts_majority():
    X = np.zeros((20, 1))
    y = np.array([0] * 12 + [1] * 8)
    m = FeatureMatrix(("c",), tuple(map(str, range(20))), X, y)
    r = train_eval(SubsetMask(1, 1), Algorithm.RANDOM_FOREST, m, SweepPlan(m=1, k_folds=4, rf_trees=3))
    assert r.degenerate_folds == (0, 1, 2, 3)
    for f1 in r.fold_f1:
        # all-FAIL predictions on a 3/2 test fold
        assert f1 == pytest.approx(float(oracle_weighted_f1([0, 0, 0, 1, 1], [0] * 5)))


def test_sweep_order_and_determinism():
    m = toy_matrix(n=40)
    plan = SweepPlan(m=3, k_folds=4, rf_trees=5, seed=9)
    a = sweep(m, plan)
    b = sweep(m, plan)
    assert len(a) == 14
    assert [(r.subset.bits, r.algorithm) for r in a] == [(s, alg) for s in range(1, 8) for alg in plan.algorithms]
    assert results_csv(a, m.metric_names, 4) == results_csv(b, m.metric_names, 4)


def result(bits, m, f1, alg=Algorithm.SVM):
    return EvalResult(SubsetMask(bits, m), alg, (f1,), f1)


def test_significance_counts():
    plan = SweepPlan(m=3, k_folds=2)
    rs = [result(0b001, 3, 0.9), result(0b011, 3, 0.8), result(0b111, 3, 0.7),
          result(0b110, 3, 0.2), result(0b100, 3, 0.69, Algorithm.RANDOM_FOREST)]
    rep = significance(rs, plan, ("a", "b", "c"))
    assert rep.good_classifier_count == 3
    assert rep.usage_fraction == (1.0, pytest.approx(2 / 3), pytest.approx(1 / 3))
    assert rep.verdicts == (Verdict.SIGNIFICANT, Verdict.SIGNIFICANT, Verdict.IRRELEVANT)
    assert rep.per_algorithm["RANDOM_FOREST"].no_classifier_passed
    assert json.loads(json.dumps(rep.to_dict()))["metrics"][0]["verdict"] == "SIGNIFICANT"


def test_significance_boundaries():
    plan = SweepPlan(m=2, k_folds=2)
    # fraction exactly 0.5 is not above hi; exactly 0.35 is not below lo
    rs = [result(0b01, 2, 0.8), result(0b10, 2, 0.8)]
    assert significance(rs, plan).verdicts == (Verdict.NEUTRAL, Verdict.NEUTRAL)
    empty = significance([result(1, 2, 0.1)], plan)
    assert empty.no_classifier_passed
    assert set(empty.verdicts) == {Verdict.NEUTRAL}


def test_read_metrics_csv(tmp_path):
    path = tmp_path / "m.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["candidate_id", "section", "x", "y", "label"])
        w.writerow(["a", "A", 1, 2, "pass"])
        w.writerow(["b", "B", 3, 4, ""])
        w.writerow(["c", "A", 5, 6, "FAIL"])
    m = read_metrics_csv(path, ["x", "y"], group_column="section")
    assert m.row_ids == ("a", "c")
    assert list(m.y) == [1, 0]
    assert m.groups == ("A", "A")
    with pytest.raises(ArgumentError):
        read_metrics_csv(path, ["zz"])


def test_sweep_by_group():
    base = toy_matrix(n=60)
    m = FeatureMatrix(base.metric_names, base.row_ids, base.X, base.y,
                      tuple("g1" if i % 2 else "g2" for i in range(60)))
    out = sweep_by_group(m, SweepPlan(m=3, k_folds=3, rf_trees=3, algorithms=("SVM",)))
    assert sorted(out) == ["g1", "g2"]
    assert all(len(v) == 7 for v in out.values())


@pytest.mark.parametrize("m", [1, 4, 9])
def test_each_metric_in_half_the_subsets(m):
    masks = enumerate_subsets(m)
    for i in range(m):
        assert sum(1 for s in masks if i in s) == 2 ** (m - 1)


@pytest.mark.parametrize("alg", list(Algorithm))
def test_label_column_is_learned_perfectly(alg):
    rng = np.random.default_rng(3)
    y = np.array([0] * 25 + [1] * 15)
    X = np.column_stack([y, rng.normal(size=40)])
    m = FeatureMatrix(("f0", "f1"), tuple(map(str, range(40))), X, y)
    r = train_eval(SubsetMask(0b01, 2), alg, m, SweepPlan(m=2, k_folds=5, rf_trees=15))
    assert r.weighted_f1 == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_constant_features_score_majority_baseline(seed):
    y = np.array([0] * 36 + [1] * 24)
    m = FeatureMatrix(("a", "b"), tuple(map(str, range(60))), np.ones((60, 2)), y)
    base = float(oracle_weighted_f1(list(y), [0] * 60))
    for alg in Algorithm:
        r = train_eval(SubsetMask(0b11, 2), alg, m, SweepPlan(m=2, k_folds=5, seed=seed, rf_trees=5))
        assert abs(r.weighted_f1 - base) <= 0.05


def test_threshold_signal_subsets_score_high():
    rng = np.random.default_rng(11)
    X = rng.poisson(5, size=(120, 4)).astype(float)
    # keep a gap around the threshold so a soft margin is not crowded
    X[:, 1] = rng.choice([-1, 1], size=120) * rng.uniform(2, 10, size=120)
    y = (X[:, 1] > 0).astype(np.int64)
    m = FeatureMatrix(tuple("abcd"), tuple(map(str, range(120))), X, y)
    for r in sweep(m, SweepPlan(m=4, k_folds=5, rf_trees=25)):
        if 1 in r.subset:
            assert r.weighted_f1 >= 0.95, (r.subset.indices, r.algorithm, r.weighted_f1)


def test_standardization_ignores_test_rows():
    # blow up one PASS test row along the signal column; if that row fed the
    # scaling, every other row in its fold would collapse onto the mean
    m = toy_matrix(n=50, signal=0)
    plan = SweepPlan(m=3, k_folds=5, rf_trees=5)
    folds = stratified_folds(m.y, 5, plan.seed)
    row = int(np.flatnonzero((folds == 2) & (m.y == 1))[0])
    X2 = m.X.copy()
    X2[row, 0] = 1e6
    m2 = FeatureMatrix(m.metric_names, m.row_ids, X2, m.y)
    a = train_eval(SubsetMask(0b001, 3), "SVM", m, plan, folds)
    b = train_eval(SubsetMask(0b001, 3), "SVM", m2, plan, folds)
    assert a.fold_f1[2] == b.fold_f1[2] == 1.0


@pytest.mark.parametrize("share, verdict", [(0.6, Verdict.SIGNIFICANT), (0.3, Verdict.IRRELEVANT),
                                            (0.4, Verdict.NEUTRAL)])
def test_verdict_rule(share, verdict):
    plan = SweepPlan(m=2, k_folds=2)
    n_with = int(share * 10)
    rs = [result(0b11 if i < n_with else 0b10, 2, 0.9) for i in range(10)]
    assert significance(rs, plan).verdicts[0] is verdict


@given(st.lists(st.tuples(st.integers(1, 15), st.floats(0, 1)), min_size=1, max_size=30),
       st.floats(0, 1), st.floats(0, 1))
def test_gate_monotone(rows, g1, g2):
    lo, hi = sorted((g1, g2))
    rs = [result(b, 4, f) for b, f in rows]
    a = significance(rs, SweepPlan(m=4, k_folds=2, f1_gate=lo))
    b = significance(rs, SweepPlan(m=4, k_folds=2, f1_gate=hi))
    assert b.good_classifier_count <= a.good_classifier_count
    assert all(0 <= f <= 1 for f in a.usage_fraction + b.usage_fraction)
