"""
Transductive conformal prediction
=================================

TCP refits the forest on the training set augmented with each test object
under each candidate label, so it costs one forest per (object, label) pair.
Keep the data small.
"""

from conformalrf import ForestConfig, TcpConfig, prediction_region, tcp_pvalues
from conformalrf.io import synthetic_blobs

train = synthetic_blobs(30, [[0, 0], [2, 2], [0, 4]], spread=1.0, seed=3)
queries = [[0.0, 0.0], [1.0, 1.0], [1.0, 3.0], [6.0, -3.0]]

pvalues = tcp_pvalues(train, queries, TcpConfig(ForestConfig(n_trees=50), seed=0))
labels = train.label_space.labels
for x, row in zip(queries, pvalues.values):
    region = prediction_region(row, 0.1)
    members = [labels[y] for y in sorted(region.members)]
    pvals = {lab: round(float(p), 3) for lab, p in zip(labels, row)}
    print(x, pvals, "->", members, region.kind)
