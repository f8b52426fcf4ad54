"""Random-forest classifier whose per-class vote proportions serve as conformity scores.

Standard Breiman construction: every tree sees a bootstrap resample of the
training rows and considers a random subset of features at each split,
choosing the axis-aligned threshold with the lowest weighted Gini impurity.
Each tree casts one hard vote, the majority class of the leaf it routes an
object to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from conformalrf.core import (
    STREAM_TREE,
    ConformalError,
    DataError,
    Dataset,
    LabelSpace,
    check_seed,
    derive_rng,
)


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters.

    ``max_depth=None`` grows trees until leaves are pure or too small to
    split. ``features_per_split="sqrt"`` means ``ceil(sqrt(p))``.
    """

    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: Union[int, str] = "sqrt"

    def __post_init__(self):
        if not _is_int(self.n_trees) or self.n_trees < 1:
            raise ConformalError(f"n_trees must be a positive integer, got {self.n_trees!r}")
        if self.max_depth is not None and (not _is_int(self.max_depth) or self.max_depth < 1):
            raise ConformalError(
                f"max_depth must be a positive integer or None, got {self.max_depth!r}"
            )
        if not _is_int(self.min_samples_leaf) or self.min_samples_leaf < 1:
            raise ConformalError(
                f"min_samples_leaf must be a positive integer, got {self.min_samples_leaf!r}"
            )
        k = self.features_per_split
        if not (k == "sqrt" or (_is_int(k) and k >= 1)):
            raise ConformalError(
                f"features_per_split must be a positive integer or 'sqrt', got {k!r}"
            )

    def resolve_features(self, p: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, math.ceil(math.sqrt(p)))
        if self.features_per_split > p:
            raise ConformalError(
                f"features_per_split={self.features_per_split} exceeds the {p} available features"
            )
        return int(self.features_per_split)


def _is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_))


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flattened binary tree; node 0 is the root.

    Internal nodes route ``x[feature] <= threshold`` to ``left``, everything
    else to ``right``. Leaves have ``feature == -1``. ``counts`` holds the
    class histogram of the (bootstrapped) training rows reaching each node
    and ``vote`` its majority class, ties to the lowest index.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    vote: np.ndarray
    bootstrap_counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while rows.size:
            cur = node[rows]
            feat = self.feature[cur]
            internal = feat >= 0
            rows, cur, feat = rows[internal], cur[internal], feat[internal]
            go_left = X[rows, feat] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.vote[self.apply(X)]


def _best_split(X, y, rows, candidates, n_classes, min_leaf):
    """Best (feature, threshold, score) over ``candidates`` or ``None``.

    The score is ``sum(c_L**2)/n_L + sum(c_R**2)/n_R``, which grows exactly
    as the weighted Gini impurity of the children shrinks. Ties keep the
    lowest feature index, then the lowest threshold.
    """
    n = rows.size
    sizes_left = np.arange(1, n)
    sizes_right = n - sizes_left
    size_ok = (sizes_left >= min_leaf) & (sizes_right >= min_leaf)
    if not size_ok.any():
        return None
    onehot = np.eye(n_classes)[y[rows]]
    totals = onehot.sum(axis=0)
    best = None
    for f in candidates:
        values = X[rows, f]
        order = np.argsort(values, kind="stable")
        xs = values[order]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = totals - left
        ok = size_ok & (xs[:-1] < xs[1:])
        if not ok.any():
            continue
        score = (left**2).sum(axis=1) / sizes_left + (right**2).sum(axis=1) / sizes_right
        score = np.where(ok, score, -np.inf)
        i = int(np.argmax(score))
        if best is None or score[i] > best[2]:
            threshold = 0.5 * (xs[i] + xs[i + 1])
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best = (int(f), float(threshold), float(score[i]))
    return best


def _grow_tree(X, y, n_classes, config: ForestConfig, n_features_split, rng) -> DecisionTree:
    n, p = X.shape
    draws = rng.integers(0, n, size=n)
    bootstrap_counts = np.bincount(draws, minlength=n)

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(draws), draws, 0)]
    min_leaf = config.min_samples_leaf
    while stack:
        node, rows, depth = stack.pop()
        hist = counts[node]
        if np.count_nonzero(hist) <= 1:
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        if rows.size < 2 * min_leaf:
            continue
        candidates = np.sort(rng.choice(p, size=n_features_split, replace=False))
        split = _best_split(X, y, rows, candidates, n_classes, min_leaf)
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[rows, f] <= thr
        lnode = new_node(rows[go_left])
        rnode = new_node(rows[~go_left])
        feature[node], threshold[node] = f, thr
        left[node], right[node] = lnode, rnode
        # Right child pushed first so the left subtree is expanded first.
        stack.append((rnode, rows[~go_left], depth + 1))
        stack.append((lnode, rows[go_left], depth + 1))

    counts_arr = np.array(counts, dtype=np.int64)
    arrays = dict(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        counts=counts_arr,
        vote=np.argmax(counts_arr, axis=1).astype(np.intp),
        bootstrap_counts=bootstrap_counts,
    )
    for a in arrays.values():
        a.setflags(write=False)
    return DecisionTree(**arrays)


@dataclass(frozen=True, eq=False)
class Forest:
    """Trained ensemble; see :func:`train_forest`."""

    trees: tuple
    label_space: LabelSpace
    config: ForestConfig
    n_features: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"dimension mismatch: forest expects {self.n_features} features, "
                f"got shape {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise DataError("objects must have finite feature values")
        return X

    def vote_counts(self, X) -> np.ndarray:
        """Integer (m x l) matrix of tree votes per class."""
        X = self._check(X)
        votes = np.zeros((X.shape[0], len(self.label_space)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict(X)] += 1
        return votes

    def vote_proportions(self, X) -> np.ndarray:
        return self.vote_counts(X) / self.n_trees

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.vote_counts(X), axis=1)


def train_forest(data: Dataset, config: ForestConfig = ForestConfig(), seed: int = 0) -> Forest:
    """Fit a random forest on ``data``.

    Tree ``t`` draws all of its randomness (bootstrap and candidate features)
    from its own stream derived from ``(seed, t)``, so the result does not
    depend on the order in which trees are built.
    """
    seed = check_seed(seed)
    k = config.resolve_features(data.p)
    X, y = data.features, data.labels
    trees = tuple(
        _grow_tree(X, y, data.n_classes, config, k, derive_rng(seed, STREAM_TREE, t))
        for t in range(config.n_trees)
    )
    return Forest(trees, data.label_space, config, data.p)


def vote_proportions(forest: Forest, obj) -> np.ndarray:
    """Fraction of trees voting for each class, for one object (or a matrix of them)."""
    obj = np.asarray(obj, dtype=np.float64)
    props = forest.vote_proportions(obj)
    return props[0] if obj.ndim == 1 else props


def predict_class(forest: Forest, obj):
    """Majority-vote class index; ties go to the lowest index."""
    obj = np.asarray(obj, dtype=np.float64)
    pred = forest.predict(obj)
    return int(pred[0]) if obj.ndim == 1 else pred
