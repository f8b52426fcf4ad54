"""Shared data model: label spaces, datasets, p-value matrices and regions.

All containers are immutable after construction; the numpy arrays they hold
are flagged read-only so they can be shared between readers freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

MAX_SEED = 2**64 - 1


class ConformalError(ValueError):
    """Base class for errors raised by this package."""


class DataError(ConformalError):
    """Malformed or inconsistent input data."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def check_seed(seed) -> int:
    """Validate a seed as an unsigned 64-bit integer and return it as ``int``."""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ConformalError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ConformalError(f"seed must lie in [0, 2**64 - 1], got {seed}")
    return seed


# Stream tags keep the randomness of different consumers of one seed apart.
STREAM_SPLIT = 1
STREAM_TREE = 2
STREAM_TIE_BREAK = 3
STREAM_TCP_REFIT = 4


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *keys)``.

    Streams for different key tuples are statistically independent, which is
    what lets per-tree and per-(object, label) randomness stay reproducible
    regardless of evaluation order.
    """
    seed = check_seed(seed)
    for k in keys:
        if not 0 <= int(k) < 2**32:
            raise ConformalError(f"stream key must fit in 32 bits, got {k}")
    # Fixed-width seed words plus the key count make the entropy encoding
    # injective; SeedSequence zero-pads short inputs otherwise.
    entropy = [seed & 0xFFFFFFFF, seed >> 32, len(keys), *(int(k) for k in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed drawn from the stream ``(seed, *keys)``."""
    return int(derive_rng(seed, *keys).integers(0, MAX_SEED, dtype=np.uint64, endpoint=True))


@dataclass(frozen=True)
class LabelSpace:
    """Ordered set of class identifiers with a dense index ``0..l-1``."""

    labels: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise DataError(f"class identifiers must be unique, got {labels!r}")
        if len(labels) < 2:
            raise DataError(f"fewer than 2 classes: {labels!r}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DataError(
                f"unknown class {label!r}; known classes are {list(self.labels)}"
            ) from None

    def encode(self, raw_labels: Iterable[Hashable]) -> np.ndarray:
        return np.array([self.index(lab) for lab in raw_labels], dtype=np.intp)

    def decode(self, indices: Iterable[int]) -> list:
        return [self.labels[int(i)] for i in indices]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Real feature matrix (n x p) with dense label indices.

    Use :func:`make_dataset` to build one from raw class identifiers.
    """

    features: np.ndarray
    labels: np.ndarray
    label_space: LabelSpace

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got shape {features.shape}")
        n, p = features.shape
        if n < 1 or p < 1:
            raise DataError(f"dataset needs n >= 1 rows and p >= 1 columns, got {n}x{p}")
        if labels.shape != (n,):
            raise DataError(
                f"dimension mismatch: {n} feature rows but {labels.size} labels"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            raise DataError("label indices must be integers")
        l = len(self.label_space)
        if np.any(labels < 0) or np.any(labels >= l):
            raise DataError(f"label indices must lie in [0, {l - 1}]")
        _check_finite(features)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.intp)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_space)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def raw_labels(self) -> list:
        return self.label_space.decode(self.labels)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.features[rows], self.labels[rows], self.label_space)

    def __len__(self) -> int:
        return self.n


def _check_finite(features: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(features))
    if bad.size:
        row, col = bad[0]
        raise DataError(
            f"non-finite feature value {features[row, col]!r} at row {row}, column {col}"
        )


def make_dataset(features, raw_labels: Sequence[Hashable]) -> Dataset:
    """Build a :class:`Dataset`, indexing classes by first appearance.

    >>> d = make_dataset([[0, 1], [2, 3], [4, 5]], ["a", "b", "a"])
    >>> d.label_space.labels, d.labels.tolist()
    (('a', 'b'), [0, 1, 0])
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"features must be a 2-D matrix, got shape {features.shape}")
    raw_labels = list(raw_labels)
    if features.shape[0] != len(raw_labels):
        raise DataError(
            f"dimension mismatch: {features.shape[0]} feature rows but "
            f"{len(raw_labels)} labels"
        )
    distinct = list(dict.fromkeys(raw_labels))
    if len(distinct) < 2:
        raise DataError(f"fewer than 2 classes: {distinct!r}")
    space = LabelSpace(tuple(distinct))
    return Dataset(features, space.encode(raw_labels), space)


def split_dataset(data: Dataset, proper_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified split into a proper training set and a calibration set.

    Each class is shuffled independently and cut at
    ``round(n_y * proper_fraction)``; both parts must keep at least one
    member of every class.
    """
    if not 0.0 < proper_fraction < 1.0:
        raise ConformalError(f"proper_fraction must lie in (0, 1), got {proper_fraction}")
    rng = derive_rng(seed, STREAM_SPLIT)
    proper, calibration = [], []
    for y in range(data.n_classes):
        members = np.flatnonzero(data.labels == y)
        cut = int(round(members.size * proper_fraction))
        if cut < 1 or cut > members.size - 1:
            raise DataError(
                f"class {data.label_space.labels[y]!r} has {members.size} member(s); "
                f"too small to appear in both parts at fraction {proper_fraction}"
            )
        members = rng.permutation(members)
        proper.append(members[:cut])
        calibration.append(members[cut:])
    proper_rows = np.sort(np.concatenate(proper))
    calibration_rows = np.sort(np.concatenate(calibration))
    return data.subset(proper_rows), data.subset(calibration_rows)


@dataclass(frozen=True, eq=False)
class PValueMatrix:
    """Conformal p-values, one row per test object and one column per label."""

    values: np.ndarray
    label_space: LabelSpace

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.label_space):
            raise DataError(
                f"p-value matrix must have {len(self.label_space)} columns, "
                f"got shape {values.shape}"
            )
        if np.any(~(values >= 0.0) | (values > 1.0)):
            raise DataError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def region_mask(self, epsilon: float) -> np.ndarray:
        """Boolean (m x l) membership matrix of the regions at ``epsilon``."""
        check_epsilon(epsilon)
        return self.values > epsilon

    def regions(self, epsilon: float) -> list["PredictionRegion"]:
        mask = self.region_mask(epsilon)
        return [PredictionRegion(frozenset(np.flatnonzero(r).tolist()), epsilon) for r in mask]


def check_epsilon(epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise ConformalError(f"significance level must lie in (0, 1), got {epsilon}")
    return float(epsilon)


@dataclass(frozen=True)
class PredictionRegion:
    """Labels (as dense indices) whose p-value exceeds ``epsilon``."""

    members: frozenset
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(y) for y in self.members))
        check_epsilon(self.epsilon)

    @property
    def kind(self) -> str:
        """``"empty"``, ``"singleton"`` or ``"multiple"``."""
        size = len(self.members)
        if size == 0:
            return "empty"
        return "singleton" if size == 1 else "multiple"

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, label) -> bool:
        return label in self.members
