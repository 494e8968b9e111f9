"""Exhaustive metric-subset sweep with two classifier families.

Every non-empty subset of the m metrics is scored by stratified k-fold cross
validation for each algorithm.  Within a fold the training rows are
oversampled to balance the classes and standardized; the test fold is never
touched by either step.  Classifiers whose mean fold weighted-F1 reaches the
gate are "good", and each metric is judged by the fraction of good
classifiers whose subset contains it.

Seeding: fold assignment uses ``plan.seed`` alone, so every subset is scored
on the same folds.  Each (mask, algorithm, fold) task derives its own seeds
as ``SeedSequence([plan.seed, mask, algorithm_index, fold]).generate_state(2)``
-> ``(oversample_seed, model_seed)``; random forests further expand
``model_seed`` into one seed per tree (see :class:`RandomForest`).
"""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ArgumentError
from .learners import LinearSVM, RandomForest

log = logging.getLogger(__name__)

MAX_METRICS = 24
PASS, FAIL = 1, 0


class Algorithm(str, enum.Enum):
    SVM = "SVM"
    RANDOM_FOREST = "RANDOM_FOREST"


ALGORITHM_ORDER = (Algorithm.SVM, Algorithm.RANDOM_FOREST)


class Verdict(str, enum.Enum):
    SIGNIFICANT = "SIGNIFICANT"
    NEUTRAL = "NEUTRAL"
    IRRELEVANT = "IRRELEVANT"


@dataclass(frozen=True)
class FeatureMatrix:
    metric_names: tuple[str, ...]
    row_ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        m = len(self.metric_names)
        if m < 1:
            raise ArgumentError("need at least one metric")
        if X.ndim != 2 or X.shape[1] != m:
            raise ArgumentError(f"feature rows must have exactly {m} values")
        if not np.isfinite(X).all():
            raise ArgumentError("features must be finite")
        if len(y) != X.shape[0] or len(self.row_ids) != X.shape[0]:
            raise ArgumentError("row ids, features and labels differ in length")
        if not np.isin(y, (PASS, FAIL)).all():
            raise ArgumentError("labels must be 0 (FAIL) or 1 (PASS)")
        if self.groups is not None and len(self.groups) != len(y):
            raise ArgumentError("groups must have one entry per row")

    @property
    def m(self) -> int:
        return len(self.metric_names)

    def require_both_classes(self) -> None:
        if len(np.unique(self.y)) < 2:
            raise ArgumentError("training needs both PASS and FAIL rows")

    def subset_rows(self, mask: np.ndarray) -> "FeatureMatrix":
        ids = tuple(np.asarray(self.row_ids, dtype=object)[mask])
        groups = tuple(np.asarray(self.groups, dtype=object)[mask]) if self.groups else None
        return FeatureMatrix(self.metric_names, ids, self.X[mask], self.y[mask], groups)


@dataclass(frozen=True, order=True)
class SubsetMask:
    bits: int
    m: int

    def __post_init__(self):
        if not 1 <= self.bits < (1 << self.m):
            raise ArgumentError(f"mask {self.bits} is not a non-empty subset of {self.m} metrics")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.m) if self.bits >> i & 1)

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    def __contains__(self, i: int) -> bool:
        return bool(self.bits >> i & 1)

    @property
    def binary(self) -> str:
        return format(self.bits, f"0{self.m}b")


def enumerate_subsets(m: int) -> list[SubsetMask]:
    if not 1 <= m <= MAX_METRICS:
        raise ArgumentError(f"metric count must be within 1..{MAX_METRICS}, got {m}")
    return [SubsetMask(b, m) for b in range(1, 1 << m)]


def combinations_total(m: int) -> int:
    """Sum over k of C(m, k) for k = 1..m."""
    return sum(math.comb(m, k) for k in range(1, m + 1))


@dataclass(frozen=True)
class SweepPlan:
    m: int
    algorithms: tuple[Algorithm, ...] = ALGORITHM_ORDER
    k_folds: int = 10
    seed: int = 0
    f1_gate: float = 0.7
    hi_threshold: float = 0.50
    lo_threshold: float = 0.35
    rf_trees: int = 100
    svm_c: float = 1.0
    svm_max_iter: int = 1000
    svm_tol: float = 1e-4

    def __post_init__(self):
        algs = tuple(Algorithm(a) for a in self.algorithms)
        if not algs:
            raise ArgumentError("no algorithm selected")
        object.__setattr__(self, "algorithms", tuple(a for a in ALGORITHM_ORDER if a in algs))
        if not 1 <= self.m <= MAX_METRICS:
            raise ArgumentError(f"metric count must be within 1..{MAX_METRICS}")
        if self.k_folds < 2:
            raise ArgumentError("k_folds must be at least 2")
        if self.seed < 0:
            raise ArgumentError("seed must be unsigned")
        if not 0 <= self.lo_threshold < self.hi_threshold <= 1:
            raise ArgumentError("need 0 <= lo_threshold < hi_threshold <= 1")
        if self.rf_trees < 1:
            raise ArgumentError("rf_trees must be positive")

    @property
    def combinations_total(self) -> int:
        return combinations_total(self.m)


@dataclass(frozen=True)
class EvalResult:
    subset: SubsetMask
    algorithm: Algorithm
    fold_f1: tuple[float, ...]
    weighted_f1: float
    degenerate_folds: tuple[int, ...] = ()


# -- building blocks ----------------------------------------------------------

def stratified_folds(labels: Sequence, k: int, seed: int) -> np.ndarray:
    """Fold index (0..k-1) for every row, stratified by label.

    Rows of each class are shuffled and dealt round-robin; the dealing
    position carries over from one class to the next so fold sizes also stay
    within one of each other.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ArgumentError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    if (counts < k).any():
        small = classes[counts < k].tolist()
        raise ArgumentError(f"classes {small} have fewer than {k} rows")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    return folds


def oversample(labels: Sequence, seed: int) -> np.ndarray:
    """Row positions of a class-balanced version of ``labels``.

    All input positions come first, in order, followed by minority positions
    drawn uniformly with replacement until both classes have equal counts.
    """
    y = np.asarray(labels)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ArgumentError("oversampling needs exactly two classes")
    base = np.arange(len(y))
    deficit = counts.max() - counts.min()
    if deficit == 0:
        return base
    minority = np.flatnonzero(y == classes[np.argmin(counts)])
    rng = np.random.default_rng(seed)
    return np.concatenate([base, rng.choice(minority, size=deficit, replace=True)])


def weighted_f1(y_true: Sequence, y_pred: Sequence) -> float:
    """Support-weighted mean of per-class F1 over the classes in ``y_true``."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise ArgumentError("y_true and y_pred differ in length")
    if t.size == 0:
        raise ArgumentError("empty label vectors")
    total = 0.0
    for c in np.unique(t):
        tp = np.sum((t == c) & (p == c))
        fp = np.sum((t != c) & (p == c))
        fn = np.sum((t == c) & (p != c))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += (tp + fn) * f1
    return float(total / t.size)


def task_seeds(seed: int, mask: int, algorithm: Algorithm, fold: int) -> tuple[int, int]:
    ss = np.random.SeedSequence([seed, mask, ALGORITHM_ORDER.index(Algorithm(algorithm)), fold])
    a, b = ss.generate_state(2)
    return int(a), int(b)


@dataclass(frozen=True)
class FoldSplit:
    fold: int
    train_rows: np.ndarray   # oversampled; may repeat rows
    test_rows: np.ndarray
    oversample_seed: int
    model_seed: int


def fold_splits(y: np.ndarray, folds: np.ndarray, k: int, seed: int, mask: int,
                algorithm: Algorithm) -> Iterator[FoldSplit]:
    """Train/test row positions per fold; oversampling touches training rows only."""
    for f in range(k):
        test = np.flatnonzero(folds == f)
        train = np.flatnonzero(folds != f)
        os_seed, model_seed = task_seeds(seed, mask, algorithm, f)
        if len(np.unique(y[train])) == 2:
            train = train[oversample(y[train], os_seed)]
        yield FoldSplit(f, train, test, os_seed, model_seed)


def _majority(y: np.ndarray) -> int:
    pos = int(np.sum(y == PASS))
    return PASS if pos > len(y) - pos else FAIL


def _make_model(algorithm: Algorithm, plan: SweepPlan, seed: int, tie_class: int):
    if algorithm is Algorithm.SVM:
        return LinearSVM(C=plan.svm_c, max_iter=plan.svm_max_iter, tol=plan.svm_tol, seed=seed)
    return RandomForest(n_trees=plan.rf_trees, seed=seed, tie_class=tie_class)


def train_eval(subset: SubsetMask, algorithm: Algorithm | str, matrix: FeatureMatrix,
               plan: SweepPlan, folds: np.ndarray | None = None) -> EvalResult:
    """Cross-validated weighted F1 of one (subset, algorithm) pair.

    A fold is *degenerate* when its training part holds a single class or its
    selected features have no variance there; such folds predict the
    training-majority class and are listed in ``degenerate_folds``.
    """
    algorithm = Algorithm(algorithm)
    if not isinstance(subset, SubsetMask):
        raise ArgumentError("subset must be a SubsetMask")
    if subset.m != matrix.m:
        raise ArgumentError(f"subset covers {subset.m} metrics, matrix has {matrix.m}")
    matrix.require_both_classes()
    if folds is None:
        folds = stratified_folds(matrix.y, plan.k_folds, plan.seed)
    X = matrix.X[:, list(subset.indices)]
    y = matrix.y

    scores = []
    degenerate = []
    for split in fold_splits(y, folds, plan.k_folds, plan.seed, subset.bits, algorithm):
        raw_train = folds != split.fold
        majority = _majority(y[raw_train])
        Xtr = X[split.train_rows]
        ytr = y[split.train_rows]
        mean = Xtr.mean(axis=0)
        std = Xtr.std(axis=0)
        if len(np.unique(ytr)) < 2 or not (std > 0).any():
            pred = np.full(len(split.test_rows), majority)
            degenerate.append(split.fold)
        else:
            std[std == 0] = 1.0
            model = _make_model(algorithm, plan, split.model_seed, majority)
            model.fit((Xtr - mean) / std, ytr)
            pred = model.predict((X[split.test_rows] - mean) / std)
        scores.append(weighted_f1(y[split.test_rows], pred))
    return EvalResult(subset, algorithm, tuple(scores), float(np.mean(scores)), tuple(degenerate))


def sweep(matrix: FeatureMatrix, plan: SweepPlan,
          progress: Callable[[int, int], None] | None = None) -> list[EvalResult]:
    """One result per (subset, algorithm), ordered by mask then algorithm."""
    if plan.m != matrix.m:
        raise ArgumentError(f"plan is for {plan.m} metrics, matrix has {matrix.m}")
    matrix.require_both_classes()
    folds = stratified_folds(matrix.y, plan.k_folds, plan.seed)
    masks = enumerate_subsets(plan.m)
    out = []
    for n, mask in enumerate(masks, 1):
        for alg in plan.algorithms:
            out.append(train_eval(mask, alg, matrix, plan, folds))
        if progress:
            progress(n, len(masks))
    return out


def sweep_by_group(matrix: FeatureMatrix, plan: SweepPlan) -> dict[str, list[EvalResult]]:
    """Independent sweeps per value of ``matrix.groups`` (e.g. per discipline)."""
    if matrix.groups is None:
        raise ArgumentError("matrix has no grouping column")
    out = {}
    for g in sorted(set(matrix.groups)):
        sel = np.array([x == g for x in matrix.groups])
        out[g] = sweep(matrix.subset_rows(sel), plan)
    return out


# -- significance -------------------------------------------------------------

@dataclass
class SignificanceReport:
    metric_names: tuple[str, ...]
    usage_fraction: tuple[float, ...]
    verdicts: tuple[Verdict, ...]
    good_classifier_count: int
    classifier_count: int
    f1_gate: float
    hi_threshold: float
    lo_threshold: float
    scope: str = "pooled"
    per_algorithm: dict[str, "SignificanceReport"] = field(default_factory=dict)

    @property
    def no_classifier_passed(self) -> bool:
        return self.good_classifier_count == 0

    def verdict(self, name: str) -> Verdict:
        return self.verdicts[self.metric_names.index(name)]

    def fraction(self, name: str) -> float:
        return self.usage_fraction[self.metric_names.index(name)]

    def to_dict(self) -> dict:
        d = {
            "scope": self.scope,
            "f1_gate": self.f1_gate,
            "hi_threshold": self.hi_threshold,
            "lo_threshold": self.lo_threshold,
            "classifier_count": self.classifier_count,
            "good_classifier_count": self.good_classifier_count,
            "no_classifier_passed": self.no_classifier_passed,
            "metrics": [
                {"name": n, "usage_fraction": f, "verdict": v.value}
                for n, f, v in zip(self.metric_names, self.usage_fraction, self.verdicts)
            ],
        }
        if self.per_algorithm:
            d["per_algorithm"] = {k: r.to_dict() for k, r in self.per_algorithm.items()}
        return d


def _report(results: Sequence[EvalResult], plan: SweepPlan, names: Sequence[str],
            scope: str) -> SignificanceReport:
    good = [r for r in results if r.weighted_f1 >= plan.f1_gate]
    fractions = []
    verdicts = []
    for i in range(plan.m):
        if not good:
            fractions.append(0.0)
            verdicts.append(Verdict.NEUTRAL)
            continue
        frac = sum(1 for r in good if i in r.subset) / len(good)
        fractions.append(frac)
        if frac > plan.hi_threshold:
            verdicts.append(Verdict.SIGNIFICANT)
        elif frac < plan.lo_threshold:
            verdicts.append(Verdict.IRRELEVANT)
        else:
            verdicts.append(Verdict.NEUTRAL)
    return SignificanceReport(tuple(names), tuple(fractions), tuple(verdicts), len(good),
                              len(results), plan.f1_gate, plan.hi_threshold,
                              plan.lo_threshold, scope)


def significance(results: Sequence[EvalResult], plan: SweepPlan,
                 metric_names: Sequence[str] | None = None) -> SignificanceReport:
    """Pooled report over all algorithms, with per-algorithm sub-reports."""
    names = tuple(metric_names) if metric_names else tuple(f"f{i}" for i in range(plan.m))
    if len(names) != plan.m:
        raise ArgumentError("metric name count differs from plan.m")
    pooled = _report(results, plan, names, "pooled")
    for alg in plan.algorithms:
        pooled.per_algorithm[alg.value] = _report(
            [r for r in results if r.algorithm is alg], plan, names, alg.value)
    if pooled.no_classifier_passed:
        log.warning("no classifier passed the F1 gate of %s", plan.f1_gate)
    return pooled


# -- files --------------------------------------------------------------------

def results_csv(results: Sequence[EvalResult], metric_names: Sequence[str], k: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mask", "algorithm", "metrics"] + [f"fold_{i + 1}" for i in range(k)]
               + ["weighted_f1", "degenerate_folds"])
    for r in results:
        w.writerow([r.subset.binary, r.algorithm.value,
                    "+".join(metric_names[i] for i in r.subset.indices)]
                   + [repr(s) for s in r.fold_f1]
                   + [repr(r.weighted_f1), " ".join(str(f) for f in r.degenerate_folds)])
    return buf.getvalue()


def report_json(report: SignificanceReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def read_metrics_csv(path: str | Path, metric_names: Sequence[str],
                     id_column: str = "candidate_id", label_column: str = "label",
                     group_column: str | None = None) -> FeatureMatrix:
    """Load a metrics table; rows without a pass/fail label are skipped."""
    ids, rows, labels, groups = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in (id_column, label_column, *metric_names) if c not in (reader.fieldnames or [])]
        if missing:
            raise ArgumentError(f"{path}: missing columns {missing}")
        for row in reader:
            label = (row[label_column] or "").strip().upper()
            if label not in ("PASS", "FAIL"):
                continue
            ids.append(row[id_column])
            rows.append([float(row[c]) for c in metric_names])
            labels.append(PASS if label == "PASS" else FAIL)
            if group_column:
                groups.append(row[group_column])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(metric_names))
    return FeatureMatrix(tuple(metric_names), tuple(ids), X, np.array(labels, dtype=np.int64),
                         tuple(groups) if group_column else None)
