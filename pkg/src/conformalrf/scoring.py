"""Conformity measures and class-conditional (Mondrian) calibration scores.

Scores follow the conformity convention: higher means the object looks more
typical for the hypothesized label.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Optional

import numpy as np

from conformalrf.core import ConformalError, Dataset, LabelSpace, check_seed
from conformalrf.forest import Forest, ForestConfig, train_forest


class ConformityScorer(abc.ABC):
    """Conformity measure fitted on a training set.

    Subclasses implement :meth:`fit` and :meth:`score_matrix`; everything
    else is derived from them.
    """

    label_space: Optional[LabelSpace] = None

    @abc.abstractmethod
    def fit(self, data: Dataset, seed: int) -> "ConformityScorer":
        """Fit on ``data`` and return ``self``."""

    @abc.abstractmethod
    def score_matrix(self, X) -> np.ndarray:
        """(m x l) conformity scores of every object under every label."""

    def score(self, obj, label: int) -> float:
        scores = self.score_matrix(np.asarray(obj, dtype=np.float64).reshape(1, -1))[0]
        if not 0 <= label < scores.size:
            raise ConformalError(f"label index {label} out of range [0, {scores.size - 1}]")
        return float(scores[label])


class RandomForestScorer(ConformityScorer):
    """Fraction of trees in a random forest voting for the hypothesized label."""

    def __init__(self, config: ForestConfig = ForestConfig()):
        self.config = config
        self.forest: Optional[Forest] = None

    def __repr__(self):
        return f"RandomForestScorer(config={self.config!r}, fitted={self.forest is not None})"

    def fit(self, data: Dataset, seed: int) -> "RandomForestScorer":
        self.forest = train_forest(data, self.config, check_seed(seed))
        self.label_space = data.label_space
        return self

    def score_matrix(self, X) -> np.ndarray:
        if self.forest is None:
            raise ConformalError("scorer is not fitted")
        return self.forest.vote_proportions(X)


def rf_conformity(forest: Forest, obj, label: int) -> float:
    """Vote proportion of ``label`` for a single object."""
    l = len(forest.label_space)
    if not 0 <= label < l:
        raise ConformalError(f"label index {label} out of range [0, {l - 1}]")
    return float(forest.vote_proportions(obj)[0, label])


@dataclass(frozen=True, eq=False)
class ScoredCalibration:
    """Calibration conformity scores bucketed by true label.

    ``buckets[y]`` holds the score at label ``y`` of every calibration
    observation whose true label is ``y``, in calibration order.
    """

    buckets: tuple
    label_space: LabelSpace

    def __post_init__(self):
        buckets = []
        for b in self.buckets:
            b = np.array(b, dtype=np.float64)
            b.setflags(write=False)
            buckets.append(b)
        if len(buckets) != len(self.label_space):
            raise ConformalError(
                f"expected {len(self.label_space)} buckets, got {len(buckets)}"
            )
        object.__setattr__(self, "buckets", tuple(buckets))

    @property
    def sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.buckets], dtype=np.intp)

    def __len__(self) -> int:
        return int(self.sizes.sum())


def score_calibration(scorer: ConformityScorer, calibration: Dataset) -> ScoredCalibration:
    """Score every calibration observation at its true label, bucketed by that label."""
    scores = scorer.score_matrix(calibration.features)
    own = scores[np.arange(calibration.n), calibration.labels]
    buckets = tuple(own[calibration.labels == y] for y in range(calibration.n_classes))
    return ScoredCalibration(buckets, calibration.label_space)
