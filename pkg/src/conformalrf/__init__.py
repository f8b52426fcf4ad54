"""Conformal prediction for multi-class classification on top of a random forest.

Transductive (TCP) and inductive (ICP) conformal predictors turn the vote
proportions of a random forest into class-conditional (Mondrian) smoothed
p-values, prediction regions with a guaranteed error rate, and diagnostic
metrics.
"""

from conformalrf.core import (
    ConformalError,
    DataError,
    Dataset,
    LabelSpace,
    PredictionRegion,
    PValueMatrix,
    derive_rng,
    make_dataset,
    split_dataset,
)
from conformalrf.forest import (
    Forest,
    ForestConfig,
    predict_class,
    train_forest,
    vote_proportions,
)
from conformalrf.scoring import (
    ConformityScorer,
    RandomForestScorer,
    ScoredCalibration,
    rf_conformity,
    score_calibration,
)
from conformalrf.predictors import (
    IcpModel,
    TcpConfig,
    icp_fit,
    icp_pvalues,
    prediction_region,
    smoothed_pvalue,
    tcp_pvalues,
)
from conformalrf.evaluation import (
    EvaluationReport,
    SignificanceGrid,
    calibration_curve,
    efficiency,
    error_rate,
    evaluate,
    observed_fuzziness,
    validity_deviation,
)

__version__ = "0.1.0"

__all__ = [
    "ConformalError",
    "DataError",
    "Dataset",
    "LabelSpace",
    "PredictionRegion",
    "PValueMatrix",
    "derive_rng",
    "make_dataset",
    "split_dataset",
    "Forest",
    "ForestConfig",
    "predict_class",
    "train_forest",
    "vote_proportions",
    "ConformityScorer",
    "RandomForestScorer",
    "ScoredCalibration",
    "rf_conformity",
    "score_calibration",
    "IcpModel",
    "TcpConfig",
    "icp_fit",
    "icp_pvalues",
    "prediction_region",
    "smoothed_pvalue",
    "tcp_pvalues",
    "EvaluationReport",
    "SignificanceGrid",
    "calibration_curve",
    "efficiency",
    "error_rate",
    "evaluate",
    "observed_fuzziness",
    "validity_deviation",
]
