import numpy as np
import pytest

from conformalrf.core import ConformalError, DataError, LabelSpace, make_dataset
from conformalrf.forest import (
    DecisionTree,
    Forest,
    ForestConfig,
    predict_class,
    train_forest,
    vote_proportions,
)
from conformalrf.io import synthetic_blobs


def leaf_tree(vote, n_classes=2):
    counts = np.zeros((1, n_classes), dtype=np.int64)
    counts[0, vote] = 1
    return DecisionTree(
        feature=np.array([-1]), threshold=np.array([0.0]), left=np.array([-1]),
        right=np.array([-1]), counts=counts, vote=np.array([vote]),
        bootstrap_counts=np.array([1]),
    )


def handmade_forest(votes, n_classes=2):
    space = LabelSpace(tuple(range(n_classes)))
    return Forest(tuple(leaf_tree(v, n_classes) for v in votes), space,
                  ForestConfig(n_trees=len(votes)), 2)


@pytest.fixture(scope="module")
def forest40(blobs40):
    return train_forest(blobs40, ForestConfig(n_trees=50), seed=7)


def test_training_accuracy(blobs40, forest40):
    assert np.array_equal(forest40.predict(blobs40.features), blobs40.labels)


def test_interior_points(blobs40, forest40):
    c0 = blobs40.label_space.index("0")
    c1 = blobs40.label_space.index("1")
    assert vote_proportions(forest40, [0.0, 0.0])[c0] > 0.9
    assert predict_class(forest40, [5.0, 5.0]) == c1


def test_stump_config(blobs40):
    f = train_forest(blobs40, ForestConfig(n_trees=1, max_depth=1), seed=0)
    assert f.n_trees == 1
    assert f.trees[0].n_nodes == 3
    assert f.trees[0].depth == 1


def test_max_depth_respected(blobs100):
    f = train_forest(blobs100, ForestConfig(n_trees=10, max_depth=2), seed=0)
    assert max(t.depth for t in f.trees) <= 2


def test_deterministic(blobs40):
    a = train_forest(blobs40, ForestConfig(n_trees=20), seed=11)
    b = train_forest(blobs40, ForestConfig(n_trees=20), seed=11)
    c = train_forest(blobs40, ForestConfig(n_trees=20), seed=12)
    for ta, tb in zip(a.trees, b.trees):
        for name in ("feature", "threshold", "left", "right", "counts", "bootstrap_counts"):
            assert np.array_equal(getattr(ta, name), getattr(tb, name))
    assert any(
        not np.array_equal(ta.bootstrap_counts, tc.bootstrap_counts)
        for ta, tc in zip(a.trees, c.trees)
    )


def test_bootstrap_draw_counts(blobs100):
    f = train_forest(blobs100, ForestConfig(n_trees=30), seed=1)
    for tree in f.trees:
        assert tree.bootstrap_counts.sum() == blobs100.n
        assert tree.counts[0].sum() == blobs100.n
    # Sampling with replacement: some rows are drawn twice, some never.
    counts = np.array([t.bootstrap_counts for t in f.trees])
    assert counts.max() >= 2 and (counts == 0).any()
    # Each row lands in a bootstrap with probability 1 - (1 - 1/n)^n ~ 0.634.
    assert abs((counts > 0).mean() - (1 - (1 - 1 / 100) ** 100)) < 0.03


def test_min_samples_leaf(blobs100):
    f = train_forest(blobs100, ForestConfig(n_trees=10, min_samples_leaf=4), seed=2)
    for tree in f.trees:
        assert np.all(tree.counts[tree.leaves].sum(axis=1) >= 4)


def test_vote_granularity_and_sum(blobs100, rng):
    f = train_forest(blobs100, ForestConfig(n_trees=37), seed=5)
    X = rng.uniform(-3, 8, size=(200, 2))
    counts = f.vote_counts(X)
    assert np.all(counts.sum(axis=1) == 37)
    props = f.vote_proportions(X)
    assert np.allclose(props.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    assert np.array_equal(props * 37, np.round(props * 37))


def test_handmade_votes():
    f = handmade_forest([0] * 7 + [1] * 3)
    assert vote_proportions(f, [1.0, 2.0]).tolist() == [0.7, 0.3]
    assert predict_class(f, [1.0, 2.0]) == 0


def test_tie_goes_to_lowest_index():
    f = handmade_forest([1, 0, 1, 0])
    assert vote_proportions(f, [0.0, 0.0]).tolist() == [0.5, 0.5]
    assert predict_class(f, [0.0, 0.0]) == 0


def test_single_tree_one_hot(blobs40):
    f = train_forest(blobs40, ForestConfig(n_trees=1), seed=3)
    props = vote_proportions(f, [1.0, 1.0])
    assert sorted(props.tolist()) == [0.0, 1.0]


def test_leaf_vote_is_majority_lowest_on_tie():
    # Identical objects cannot be split, so every tree is one leaf.
    data = make_dataset(np.ones((4, 1)), ["b", "a", "b", "a"])
    f = train_forest(data, ForestConfig(n_trees=200), seed=0)
    ties = 0
    for tree in f.trees:
        c = tree.counts[0]
        assert tree.n_nodes == 1
        if c[0] == c[1]:
            ties += 1
            assert tree.vote[0] == 0
        else:
            assert tree.vote[0] == int(c[1] > c[0])
    assert ties > 0


def test_split_tie_prefers_lowest_feature():
    # Two identical columns: both give the same Gini gain.
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    data = make_dataset(np.column_stack([x, x]), [0, 0, 0, 1, 1, 1])
    f = train_forest(data, ForestConfig(n_trees=5, features_per_split=2), seed=0)
    for tree in f.trees:
        assert tree.feature[0] == 0


def test_split_tie_prefers_lowest_threshold():
    # Labels 0,1,1,0 over x=0..3: cutting at 0.5 and at 2.5 are equally good.
    data = make_dataset(np.array([[0.0], [1.0], [2.0], [3.0]]), [0, 1, 1, 0])
    tree = train_forest(data, ForestConfig(n_trees=1, max_depth=1), seed=0).trees[0]
    boot = np.repeat(np.arange(4), tree.bootstrap_counts)
    xs = np.unique(data.features[boot, 0])
    if xs.size > 1 and len(set(data.labels[boot])) > 1:
        # Recompute every candidate with an independent brute-force Gini search.
        best, best_thr = None, None
        for a, b in zip(xs[:-1], xs[1:]):
            thr = (a + b) / 2
            left = data.labels[boot][data.features[boot, 0] <= thr]
            right = data.labels[boot][data.features[boot, 0] > thr]
            def gini(s):
                return 1 - sum((np.sum(s == k) / s.size) ** 2 for k in (0, 1))
            w = (left.size * gini(left) + right.size * gini(right)) / boot.size
            if best is None or w < best - 1e-12:
                best, best_thr = w, thr
        assert tree.threshold[0] == pytest.approx(best_thr)


def test_threshold_is_midpoint():
    data = make_dataset(np.array([[0.0], [1.0], [10.0], [11.0]]), [0, 0, 1, 1])
    f = train_forest(data, ForestConfig(n_trees=20, max_depth=1), seed=0)
    thresholds = {t.threshold[0] for t in f.trees if t.feature[0] >= 0}
    # Bootstrap resamples may drop values, so any pairwise midpoint is possible.
    values = [0.0, 1.0, 10.0, 11.0]
    midpoints = {(a + b) / 2 for a in values for b in values if a < b}
    assert thresholds and thresholds <= midpoints
    assert 5.5 in thresholds


def test_dimension_mismatch(forest40):
    with pytest.raises(DataError, match="dimension mismatch"):
        vote_proportions(forest40, [1.0, 2.0, 3.0])
    with pytest.raises(DataError):
        predict_class(forest40, [np.nan, 0.0])


@pytest.mark.parametrize(
    "kwargs",
    [dict(n_trees=0), dict(max_depth=0), dict(min_samples_leaf=0),
     dict(features_per_split="log2"), dict(features_per_split=0), dict(n_trees=2.5)],
)
def test_bad_config(kwargs):
    with pytest.raises(ConformalError):
        ForestConfig(**kwargs)


def test_features_per_split_exceeds_p(blobs40):
    with pytest.raises(ConformalError, match="exceeds"):
        train_forest(blobs40, ForestConfig(features_per_split=3))


def test_sqrt_features():
    assert ForestConfig().resolve_features(2) == 2
    assert ForestConfig().resolve_features(10) == 4
    assert ForestConfig().resolve_features(1) == 1


def test_multiclass_holdout():
    train = synthetic_blobs(40, [[0, 0], [6, 0], [0, 6]], 1.0, seed=4)
    test = synthetic_blobs(40, [[0, 0], [6, 0], [0, 6]], 1.0, seed=5)
    f = train_forest(train, ForestConfig(n_trees=30), seed=0)
    truth = train.label_space.encode(test.raw_labels())
    assert np.mean(f.predict(test.features) == truth) > 0.95
