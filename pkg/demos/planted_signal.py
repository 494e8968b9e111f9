"""
Recovering a planted signal
===========================

Two of eleven columns carry the label; the rest are Poisson noise.  The
exhaustive sweep trains both learners on every column subset and the
significance report counts how often each column appears among the subsets
that classify well.
"""
import time

import numpy as np

from citeassess import METRIC_NAMES, FeatureMatrix, SweepPlan, significance, sweep

rng = np.random.default_rng(7)
n = 200
z = rng.normal(size=n)
X = rng.poisson(5, size=(n, 11)).astype(float)
X[:, 7] = np.clip(np.round(10 + 3 * z + rng.normal(size=n)), 0, None)  # bc
X[:, 8] = np.clip(np.round(8 + 3 * z + rng.normal(size=n)), 0, None)   # cc
s = X[:, 7] + X[:, 8]
y = (s > np.quantile(s, 0.6)).astype(np.int64)

matrix = FeatureMatrix(METRIC_NAMES, tuple(map(str, range(n))), X, y)

# fewer trees and folds than the defaults keep this under a minute
plan = SweepPlan(m=11, k_folds=5, rf_trees=10, seed=1)
t0 = time.time()
results = sweep(matrix, plan, progress=lambda i, total: print(f"\r{i}/{total}", end=""))
print(f"\n{len(results)} classifiers in {time.time() - t0:.0f}s")

report = significance(results, plan, METRIC_NAMES)
print("good classifiers:", report.good_classifier_count)
for name, frac, verdict in zip(report.metric_names, report.usage_fraction, report.verdicts):
    print(f"{name:12s} {frac:.3f}  {verdict.value}")
