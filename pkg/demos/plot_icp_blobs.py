"""
Inductive conformal prediction on two Gaussian blobs
====================================================

Train once on a proper training set, calibrate on a held-out part, and get
p-values for every test object and label. At significance level ``eps`` the
prediction region keeps the labels whose p-value exceeds ``eps``; its error
rate should sit close to ``eps``.
"""

import numpy as np

from conformalrf import efficiency, error_rate, icp_fit, icp_pvalues
from conformalrf.io import synthetic_blobs

train = synthetic_blobs(500, [[0, 0], [3, 3]], spread=1.0, seed=0)
test = synthetic_blobs(1000, [[0, 0], [3, 3]], spread=1.0, seed=1)
truths = train.label_space.encode(test.raw_labels())

###############################################################################
# 70% of the training rows fit the forest, the rest calibrate it.
model = icp_fit(train, proper_fraction=0.7, seed=0)
print("calibration bucket sizes:", model.calibration.sizes)

pvalues = icp_pvalues(model, test.features, seed=0)
print("first rows:\n", np.round(pvalues.values[:5], 3))

###############################################################################
# Regions and their error rate at a few significance levels.
for eps in (0.05, 0.1, 0.2):
    kinds = [r.kind for r in pvalues.regions(eps)]
    print(f"eps={eps:.2f}  error={error_rate(pvalues, truths, eps):.4f}  "
          f"multiple={efficiency(pvalues, eps):.4f}  empty={kinds.count('empty')}")
