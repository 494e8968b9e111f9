"""Binary classifiers used by the subset sweep.

Both are compiled with numba: the sweep fits tens of thousands of small
models and per-call overhead dominates at this data size.

Labels are 0/1 integers throughout.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# linear SVM: hinge loss, L2 penalty, dual coordinate descent with the bias
# handled as an extra constant feature (penalized like the weights)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _svm_dual_cd(X, y, C, max_iter, tol, seed):
    """Dual coordinate descent with active-set shrinking (Hsieh et al., 2008)."""
    n, d = X.shape
    np.random.seed(seed)
    w = np.zeros(d + 1)
    alpha = np.zeros(n)
    ys = np.empty(n)
    qd = np.empty(n)
    for i in range(n):
        ys[i] = 1.0 if y[i] == 1 else -1.0
        s = 1.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        qd[i] = s
    index = np.arange(n)
    active = n
    pg_max_old = np.inf
    pg_min_old = -np.inf
    n_iter = 0
    while n_iter < max_iter:
        pg_max = -np.inf
        pg_min = np.inf
        for i in range(active - 1, 0, -1):
            k = np.random.randint(0, i + 1)
            index[i], index[k] = index[k], index[i]
        s = 0
        while s < active:
            i = index[s]
            g = w[d]
            for j in range(d):
                g += w[j] * X[i, j]
            g = ys[i] * g - 1.0
            pg = 0.0
            if alpha[i] == 0.0:
                if g > pg_max_old:
                    active -= 1
                    index[s], index[active] = index[active], index[s]
                    continue
                elif g < 0.0:
                    pg = g
            elif alpha[i] == C:
                if g < pg_min_old:
                    active -= 1
                    index[s], index[active] = index[active], index[s]
                    continue
                elif g > 0.0:
                    pg = g
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if abs(pg) > 1e-12:
                old = alpha[i]
                alpha[i] = min(max(old - g / qd[i], 0.0), C)
                delta = (alpha[i] - old) * ys[i]
                for j in range(d):
                    w[j] += delta * X[i, j]
                w[d] += delta
            s += 1
        n_iter += 1
        if pg_max - pg_min <= tol:
            if active == n:
                break
            # converged on the shrunk set: re-check every variable
            active = n
            pg_max_old = np.inf
            pg_min_old = -np.inf
            continue
        pg_max_old = pg_max if pg_max > 0.0 else np.inf
        pg_min_old = pg_min if pg_min < 0.0 else -np.inf
    return w, n_iter


class LinearSVM:
    """Maximum-margin linear classifier (hinge loss, quadratic penalty)."""

    def __init__(self, C: float = 1.0, max_iter: int = 1000, tol: float = 1e-4, seed: int = 0):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, X, y) -> "LinearSVM":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.int64)
        w, self.n_iter_ = _svm_dual_cd(X, y, float(self.C), int(self.max_iter), float(self.tol),
                                       int(self.seed) % (2**32))
        self.coef_ = w[:-1]
        self.intercept_ = w[-1]
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


# ---------------------------------------------------------------------------
# random forest: bootstrap, Gini impurity, unlimited depth, one sample per leaf
# minimum, ceil(sqrt(d)) candidate features per split
# ---------------------------------------------------------------------------


@njit(cache=True)
def _grow_tree(X, y, order, seed, max_features, feat, thr, left, right, value):
    """Grow one tree in the preallocated node arrays; returns the node count.

    ``order[f]`` lists all rows sorted by feature ``f``.  Each node owns the
    same slice ``[lo, hi)`` of every per-feature list, kept sorted by stable
    partitioning on every split, so no sorting happens inside the tree.
    """
    n, d = X.shape
    np.random.seed(seed)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        counts[np.random.randint(0, n)] += 1
    lists = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        k = 0
        for r in order[f]:
            for _ in range(counts[r]):
                lists[f, k] = r
                k += 1

    stack_node = np.empty(2 * n + 2, dtype=np.int64)
    stack_lo = np.empty(2 * n + 2, dtype=np.int64)
    stack_hi = np.empty(2 * n + 2, dtype=np.int64)
    perm = np.arange(d)
    goes_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n, dtype=np.int64)
    n_nodes = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        size = hi - lo
        pos = 0
        for t in range(lo, hi):
            pos += y[lists[0, t]]
        value[node] = pos / size
        feat[node] = -1
        if pos == 0 or pos == size or size < 2:
            continue

        best_score = np.inf
        best_f = -1
        best_t = 0.0
        visited = 0
        for r in range(d):
            # lazy Fisher-Yates: draw candidate features until max_features
            # non-constant ones have been examined
            k = r + np.random.randint(0, d - r)
            perm[r], perm[k] = perm[k], perm[r]
            f = perm[r]
            if X[lists[f, lo], f] == X[lists[f, hi - 1], f]:
                continue
            visited += 1
            left_pos = 0
            for t in range(1, size):
                row_prev = lists[f, lo + t - 1]
                left_pos += y[row_prev]
                v_prev = X[row_prev, f]
                v_next = X[lists[f, lo + t], f]
                if v_next <= v_prev:
                    continue
                nl = t
                nr = size - t
                pl = left_pos / nl
                pr = (pos - left_pos) / nr
                score = nl * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)) \
                    + nr * (1.0 - pr * pr - (1.0 - pr) * (1.0 - pr))
                if score < best_score:
                    best_score = score
                    best_f = f
                    mid = 0.5 * (v_prev + v_next)
                    best_t = v_prev if (mid == v_next or mid == np.inf) else mid
            if visited >= max_features:
                break
        if best_f < 0:
            continue

        n_left = 0
        for t in range(lo, hi):
            row = lists[best_f, t]
            if X[row, best_f] <= best_t:
                goes_left[row] = True
                n_left += 1
            else:
                goes_left[row] = False
        mid_pos = lo + n_left
        for f in range(d):
            a = lo
            b = 0
            for t in range(lo, hi):
                row = lists[f, t]
                if goes_left[row]:
                    lists[f, a] = row
                    a += 1
                else:
                    buf[b] = row
                    b += 1
            for t in range(b):
                lists[f, mid_pos + t] = buf[t]

        feat[node] = best_f
        thr[node] = best_t
        l_node = n_nodes
        r_node = n_nodes + 1
        n_nodes += 2
        left[node] = l_node
        right[node] = r_node
        stack_node[top] = r_node
        stack_lo[top] = mid_pos
        stack_hi[top] = hi
        top += 1
        stack_node[top] = l_node
        stack_lo[top] = lo
        stack_hi[top] = mid_pos
        top += 1
    return n_nodes


@njit(cache=True)
def _grow_forest(X, y, seeds, max_features):
    n, d = X.shape
    n_trees = seeds.shape[0]
    order = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        order[f] = np.argsort(X[:, f], kind="mergesort")
    cap = 2 * n + 1
    feat = np.full((n_trees, cap), -1, dtype=np.int64)
    thr = np.zeros((n_trees, cap))
    left = np.zeros((n_trees, cap), dtype=np.int64)
    right = np.zeros((n_trees, cap), dtype=np.int64)
    value = np.zeros((n_trees, cap))
    for t in range(n_trees):
        _grow_tree(X, y, order, seeds[t], max_features, feat[t], thr[t], left[t], right[t], value[t])
    return feat, thr, left, right, value


@njit(cache=True)
def _forest_votes(X, feat, thr, left, right, value):
    n = X.shape[0]
    n_trees = feat.shape[0]
    pos = np.zeros(n, dtype=np.int64)
    neg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for t in range(n_trees):
            node = 0
            while feat[t, node] >= 0:
                if X[i, feat[t, node]] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            p = value[t, node]
            if p > 0.5:
                pos[i] += 1
            elif p < 0.5:
                neg[i] += 1
    return pos, neg


class RandomForest:
    """Bagged Gini trees with hard majority vote.

    Tree ``t`` draws its bootstrap and split features from ``tree_seeds[t]``,
    where ``tree_seeds = SeedSequence(seed).generate_state(n_trees)``.
    Vote ties (and trees whose leaf is an exact 50/50 mix) go to
    ``tie_class``.
    """

    def __init__(self, n_trees: int = 100, max_features: int | None = None, seed: int = 0,
                 tie_class: int = 0):
        self.n_trees = n_trees
        self.max_features = max_features
        self.seed = seed
        self.tie_class = tie_class

    def fit(self, X, y) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.int64)
        d = X.shape[1]
        mf = self.max_features or max(1, math.ceil(math.sqrt(d)))
        self.tree_seeds_ = np.random.SeedSequence(self.seed).generate_state(self.n_trees).astype(np.int64)
        self.trees_ = _grow_forest(X, y, self.tree_seeds_, min(mf, d))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        pos, neg = _forest_votes(X, *self.trees_)
        out = np.where(pos > neg, 1, 0)
        out[pos == neg] = self.tie_class
        return out.astype(np.int64)
