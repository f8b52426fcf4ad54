import numpy as np
import pytest

from conformalrf.core import ConformalError, LabelSpace, make_dataset
from conformalrf.forest import ForestConfig, train_forest
from conformalrf.io import synthetic_blobs
from conformalrf.predictors import icp_fit
from conformalrf.scoring import (
    ConformityScorer,
    RandomForestScorer,
    ScoredCalibration,
    rf_conformity,
    score_calibration,
)

from test_forest import handmade_forest


def test_rf_conformity_selects_component():
    f = handmade_forest([0] * 7 + [1] * 3)
    assert rf_conformity(f, [0.0, 0.0], 1) == 0.3
    assert rf_conformity(f, [0.0, 0.0], 0) == 0.7
    with pytest.raises(ConformalError):
        rf_conformity(f, [0.0, 0.0], 2)


def test_rf_conformity_sums_to_one(blobs40, rng):
    f = train_forest(blobs40, ForestConfig(n_trees=25), seed=1)
    for x in rng.uniform(-2, 7, size=(20, 2)):
        total = sum(rf_conformity(f, x, y) for y in range(2))
        assert total == pytest.approx(1.0, abs=1e-12)
        for y in range(2):
            assert round(rf_conformity(f, x, y) * 25, 9).is_integer()


def test_single_tree_own_leaf(blobs40):
    f = train_forest(blobs40, ForestConfig(n_trees=1), seed=0)
    leaf_vote = f.trees[0].predict(np.array([[0.0, 0.0]]))[0]
    assert rf_conformity(f, [0.0, 0.0], leaf_vote) == 1.0


def test_bucketing_by_true_label():
    calib = make_dataset([[0.0], [1.0], [0.5]], ["a", "b", "a"])
    scorer = RandomForestScorer(ForestConfig(n_trees=5))
    scorer.fit(make_dataset([[0.0], [1.0], [0.1], [0.9]], ["a", "b", "a", "b"]), seed=0)
    scored = score_calibration(scorer, calib)
    assert scored.sizes.tolist() == [2, 1]
    assert len(scored) == 3
    full = scorer.score_matrix(calib.features)
    assert scored.buckets[0].tolist() == [full[0, 0], full[2, 0]]
    assert scored.buckets[1].tolist() == [full[1, 1]]


def test_empty_bucket_allowed_in_type():
    sc = ScoredCalibration(([0.5], []), LabelSpace(("a", "b")))
    assert sc.sizes.tolist() == [1, 0]


def test_blob_calibration_scores_high():
    data = synthetic_blobs(50, [[0, 0], [5, 5]], 1.0, seed=3)
    model = icp_fit(data, 0.7, ForestConfig(n_trees=50), seed=0)
    for bucket in model.calibration.buckets:
        assert bucket.mean() > 0.5


def test_unfitted_scorer():
    with pytest.raises(ConformalError, match="not fitted"):
        RandomForestScorer().score_matrix(np.zeros((1, 2)))


def test_scorer_interface_is_open():
    class Nearest(ConformityScorer):
        def fit(self, data, seed):
            self.centroids = np.array(
                [data.features[data.labels == y].mean(axis=0) for y in range(data.n_classes)]
            )
            self.label_space = data.label_space
            return self

        def score_matrix(self, X):
            d = np.linalg.norm(np.asarray(X)[:, None, :] - self.centroids[None], axis=2)
            return -d

    data = synthetic_blobs(30, [[0, 0], [4, 4]], 1.0, seed=1)
    model = icp_fit(data, 0.5, seed=0, scorer=Nearest())
    assert model.scorer.score([0.0, 0.0], 0) > model.scorer.score([0.0, 0.0], 1)


def test_permutation_insensitive_in_distribution(blobs40):
    """Exact order invariance is out of reach for a bootstrap forest; the score
    distribution must still be insensitive to the row order of the training set."""
    queries = synthetic_blobs(50, [[0, 0], [5, 5]], 1.0, seed=99).features
    config = ForestConfig(n_trees=100)
    base = RandomForestScorer(config).fit(blobs40, seed=0).score_matrix(queries)
    perm_rng = np.random.default_rng(0)
    for _ in range(5):
        order = perm_rng.permutation(blobs40.n)
        permuted = blobs40.subset(order)
        scores = RandomForestScorer(config).fit(permuted, seed=0).score_matrix(queries)
        assert np.mean(np.abs(scores - base)) < 0.05
