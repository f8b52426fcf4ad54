"""Transductive and inductive conformal predictors with smoothed Mondrian p-values.

For a hypothesized label ``y`` the p-value compares the conformity score of
the test object under ``y`` with the scores of reference observations whose
true label is ``y``::

    p(y) = (#{a_i < a_new} + u * #{a_i == a_new}) / (n_y + 1)

with one uniform tie-breaker ``u`` per (test object, label) pair.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from conformalrf.core import (
    STREAM_TCP_REFIT,
    STREAM_TIE_BREAK,
    ConformalError,
    DataError,
    Dataset,
    LabelSpace,
    PredictionRegion,
    PValueMatrix,
    check_epsilon,
    check_seed,
    derive_rng,
    derive_seed,
    split_dataset,
)
from conformalrf.forest import ForestConfig, train_forest
from conformalrf.scoring import (
    ConformityScorer,
    RandomForestScorer,
    ScoredCalibration,
    score_calibration,
)

logger = logging.getLogger(__name__)


def smoothed_pvalue(class_scores, alpha_new: float, u: float, include_self: bool = False) -> float:
    """Smoothed conformal p-value of a single hypothesis.

    Parameters
    ----------
    class_scores : array-like
        Conformity scores of the reference observations sharing the
        hypothesized label (the new object itself excluded).
    alpha_new : float
        Conformity score of the new object under the hypothesized label.
    u : float
        Tie-breaker in ``[0, 1]``.
    include_self : bool
        Count the new object as one extra tie. Transductive p-values set
        this, since the new object is part of the augmented sample.

    Examples
    --------
    >>> smoothed_pvalue([0.2, 0.5, 0.5, 0.9], 0.5, 0.5)
    0.4
    """
    if not 0.0 <= u <= 1.0:
        raise ConformalError(f"tie-breaker u must lie in [0, 1], got {u}")
    scores = np.asarray(class_scores, dtype=np.float64)
    below = int(np.count_nonzero(scores < alpha_new))
    ties = int(np.count_nonzero(scores == alpha_new)) + (1 if include_self else 0)
    return (below + u * ties) / (scores.size + 1)


def tie_breakers(seed: int, m: int, l: int, offset: int = 0) -> np.ndarray:
    """(m x l) tie-breakers in ``(0, 1]``, one independent stream per (object, label).

    Entry ``[i, y]`` depends only on ``(seed, offset + i, y)``, so any subset
    of test objects reproduces the same draws.
    """
    seed = check_seed(seed)
    u = np.empty((m, l))
    for i in range(m):
        for y in range(l):
            u[i, y] = 1.0 - derive_rng(seed, STREAM_TIE_BREAK, offset + i, y).random()
    return u


def _check_u(u, shape) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != shape:
        raise ConformalError(f"tie-breakers must have shape {shape}, got {u.shape}")
    if np.any(~((u >= 0.0) & (u <= 1.0))):
        raise ConformalError("tie-breakers must lie in [0, 1]")
    return u


def _objects(test_objects, n_features: int) -> np.ndarray:
    X = np.asarray(test_objects, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DataError(
            f"dimension mismatch: expected {n_features} features, got shape {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise DataError("test objects must have finite feature values")
    return X


# --- transductive --- #


@dataclass(frozen=True)
class TcpConfig:
    """Forest settings used for every refit plus the master seed."""

    forest_config: ForestConfig = ForestConfig()
    seed: int = 0

    def __post_init__(self):
        check_seed(self.seed)


def tcp_pvalues(train: Dataset, test_objects, config: TcpConfig = TcpConfig(), u=None) -> PValueMatrix:
    """Transductive p-values for every test object and every label.

    For each pair ``(x_new, y)`` a forest is refitted on the training set
    augmented with ``(x_new, y)``, and the in-sample vote share of ``y`` is
    compared between ``x_new`` and the training members of class ``y``.
    This costs ``m * l`` forest fits.
    """
    X = _objects(test_objects, train.p)
    m, l = X.shape[0], train.n_classes
    missing = np.flatnonzero(train.class_counts() == 0)
    if missing.size:
        names = train.label_space.decode(missing)
        raise DataError(f"classes missing from the training set: {names}")
    u = tie_breakers(config.seed, m, l) if u is None else _check_u(u, (m, l))

    features = np.vstack([train.features, np.zeros((1, train.p))])
    labels = np.append(train.labels, 0)
    values = np.empty((m, l))
    refits = 0
    for i in range(m):
        features[-1] = X[i]
        for y in range(l):
            labels[-1] = y
            augmented = Dataset(features, labels, train.label_space)
            forest = train_forest(
                augmented, config.forest_config, derive_seed(config.seed, STREAM_TCP_REFIT, i, y)
            )
            refits += 1
            members = np.flatnonzero(train.labels == y)
            scored = forest.vote_proportions(features[np.append(members, train.n)])[:, y]
            values[i, y] = smoothed_pvalue(scored[:-1], scored[-1], u[i, y], include_self=True)
    logger.info("TCP: %d forest refits for %d test objects x %d labels", refits, m, l)
    return PValueMatrix(values, train.label_space)


# --- inductive --- #


@dataclass(frozen=True, eq=False)
class IcpModel:
    """Scorer fitted on the proper training set plus the scored calibration set."""

    scorer: ConformityScorer
    calibration: ScoredCalibration
    label_space: LabelSpace
    n_features: int
    proper_fraction: float
    seed: int


def icp_fit(
    train: Dataset,
    proper_fraction: float = 0.7,
    forest_config: ForestConfig = ForestConfig(),
    seed: int = 0,
    scorer: Optional[ConformityScorer] = None,
) -> IcpModel:
    """Split ``train``, fit the scorer on the proper part and score the calibration part.

    ``scorer`` defaults to a :class:`RandomForestScorer` built from
    ``forest_config``; any other unfitted :class:`ConformityScorer` may be
    supplied instead.
    """
    seed = check_seed(seed)
    proper, calibration = split_dataset(train, proper_fraction, seed)
    if scorer is None:
        scorer = RandomForestScorer(forest_config)
    scorer.fit(proper, seed)
    scored = score_calibration(scorer, calibration)
    return IcpModel(scorer, scored, train.label_space, train.p, proper_fraction, seed)


def mondrian_pvalues(calibration: ScoredCalibration, alphas: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized inductive p-values for an (m x l) matrix of test scores."""
    values = np.empty(alphas.shape)
    for y, bucket in enumerate(calibration.buckets):
        if bucket.size == 0:
            warnings.warn(
                f"no calibration examples of class {calibration.label_space.labels[y]!r}; "
                "its p-values are set to 0",
                RuntimeWarning,
                stacklevel=3,
            )
            values[:, y] = 0.0
            continue
        ordered = np.sort(bucket)
        below = np.searchsorted(ordered, alphas[:, y], side="left")
        ties = np.searchsorted(ordered, alphas[:, y], side="right") - below
        values[:, y] = (below + u[:, y] * ties) / (bucket.size + 1)
    return values


def icp_pvalues(model: IcpModel, test_objects, seed: int = 0, u=None) -> PValueMatrix:
    """Inductive p-values from the single fitted scorer; no refitting.

    ``u`` overrides the seeded tie-breakers with an explicit (m x l) array.
    """
    X = _objects(test_objects, model.n_features)
    m, l = X.shape[0], len(model.label_space)
    u = tie_breakers(seed, m, l) if u is None else _check_u(u, (m, l))
    alphas = model.scorer.score_matrix(X)
    return PValueMatrix(mondrian_pvalues(model.calibration, alphas, u), model.label_space)


def prediction_region(pvalue_row, epsilon: float) -> PredictionRegion:
    """Labels whose p-value is strictly greater than ``epsilon``."""
    epsilon = check_epsilon(epsilon)
    row = np.asarray(pvalue_row, dtype=np.float64)
    return PredictionRegion(frozenset(np.flatnonzero(row > epsilon).tolist()), epsilon)
