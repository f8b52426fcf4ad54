"""Diagnostic measures for conformal predictors: error rate, efficiency,
deviation from validity, observed fuzziness and calibration curves.

Every metric takes a p-value matrix (a :class:`PValueMatrix` or a plain
array) rather than prebuilt regions, so one matrix serves all significance
levels. Smaller is better for all four.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from conformalrf.core import ConformalError, DataError, PValueMatrix, check_epsilon


def _default_epsilons() -> tuple:
    return tuple(round(k / 100, 2) for k in range(1, 100))


@dataclass(frozen=True)
class SignificanceGrid:
    """Strictly increasing significance levels in (0, 1); defaults to 0.01..0.99."""

    epsilons: tuple = field(default_factory=_default_epsilons)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ConformalError("significance grid is empty")
        for e in eps:
            check_epsilon(e)
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ConformalError("significance levels must be strictly increasing")
        object.__setattr__(self, "epsilons", eps)

    def __iter__(self):
        return iter(self.epsilons)

    def __len__(self) -> int:
        return len(self.epsilons)


def _as_grid(grid) -> SignificanceGrid:
    if grid is None:
        return SignificanceGrid()
    return grid if isinstance(grid, SignificanceGrid) else SignificanceGrid(tuple(grid))


def _values(pvalues) -> np.ndarray:
    if isinstance(pvalues, PValueMatrix):
        return pvalues.values
    values = np.asarray(pvalues, dtype=np.float64)
    if values.ndim != 2:
        raise DataError(f"p-values must form a 2-D matrix, got shape {values.shape}")
    return values


def _true_pvalues(pvalues, truths) -> np.ndarray:
    values = _values(pvalues)
    truths = np.asarray(truths, dtype=np.intp)
    if truths.shape != (values.shape[0],):
        raise DataError(
            f"length mismatch: {values.shape[0]} p-value rows but {truths.size} true labels"
        )
    if np.any((truths < 0) | (truths >= values.shape[1])):
        raise DataError("true label index out of range")
    return values[np.arange(values.shape[0]), truths]


def error_rate(pvalues, truths, epsilon: float) -> float:
    """Fraction of test objects whose region at ``epsilon`` misses the true label."""
    epsilon = check_epsilon(epsilon)
    return float(np.mean(_true_pvalues(pvalues, truths) <= epsilon))


def efficiency(pvalues, epsilon: float) -> float:
    """Fraction of test objects whose region at ``epsilon`` holds more than one label."""
    epsilon = check_epsilon(epsilon)
    values = _values(pvalues)
    return float(np.mean(np.count_nonzero(values > epsilon, axis=1) > 1))


def validity_deviation(pvalues, truths, grid=None) -> float:
    """Euclidean distance between observed error rates and the grid levels."""
    grid = _as_grid(grid)
    true_p = _true_pvalues(pvalues, truths)
    eps = np.array(grid.epsilons)
    observed = np.mean(true_p[None, :] <= eps[:, None], axis=1)
    return math.sqrt(math.fsum((observed - eps) ** 2))


def observed_fuzziness(pvalues, truths) -> float:
    """Mean over test objects of the p-values summed over the false labels."""
    values = _values(pvalues)
    _true_pvalues(values, truths)
    false_mask = np.ones(values.shape, dtype=bool)
    false_mask[np.arange(values.shape[0]), np.asarray(truths, dtype=np.intp)] = False
    # Exactly rounded sum: independent of summation order.
    return math.fsum(values[false_mask]) / values.shape[0]


def calibration_curve(pvalues, truths, grid=None) -> list[tuple[float, float]]:
    """``(epsilon, error rate)`` pairs over the grid, for plotting against the diagonal."""
    grid = _as_grid(grid)
    true_p = _true_pvalues(pvalues, truths)
    return [(e, float(np.mean(true_p <= e))) for e in grid.epsilons]


@dataclass(frozen=True)
class EvaluationReport:
    """All diagnostics of one p-value matrix against known true labels."""

    epsilons: tuple
    error_rates: tuple
    efficiencies: tuple
    validity_deviation: float
    observed_fuzziness: float
    calibration_curve: tuple

    def at(self, epsilon: float) -> tuple[float, float]:
        """``(error rate, efficiency)`` at a grid level."""
        try:
            k = self.epsilons.index(float(epsilon))
        except ValueError:
            raise ConformalError(f"{epsilon} is not on the evaluation grid") from None
        return self.error_rates[k], self.efficiencies[k]


def evaluate(pvalues, truths, grid=None) -> EvaluationReport:
    grid = _as_grid(grid)
    curve = calibration_curve(pvalues, truths, grid)
    return EvaluationReport(
        epsilons=grid.epsilons,
        error_rates=tuple(er for _, er in curve),
        efficiencies=tuple(efficiency(pvalues, e) for e in grid.epsilons),
        validity_deviation=validity_deviation(pvalues, truths, grid),
        observed_fuzziness=observed_fuzziness(pvalues, truths),
        calibration_curve=tuple(curve),
    )
