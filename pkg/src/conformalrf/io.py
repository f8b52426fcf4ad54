"""CSV ingestion and serialization, plus the synthetic Gaussian-blob generator."""

from __future__ import annotations

import csv
import os
from typing import Optional, Sequence, Union

import numpy as np

from conformalrf.core import (
    ConformalError,
    DataError,
    Dataset,
    PValueMatrix,
    check_seed,
    make_dataset,
)

LabelColumn = Union[int, str]


def format_float(value: float) -> str:
    """17 significant digits, enough for an exact round-trip of any double."""
    return format(float(value), ".17g")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and data rows of a UTF-8, comma-separated file."""
    if not os.path.isfile(path):
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: empty file, expected a header row")
    header = [h.strip() for h in rows[0]]
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(
                f"{path}: ragged row {r}: {len(row)} cells but the header has {len(header)}"
            )
    return header, rows[1:]


def resolve_label_column(header: Sequence[str], label_column: LabelColumn) -> int:
    if isinstance(label_column, str):
        if label_column in header:
            return list(header).index(label_column)
        raise DataError(
            f"unknown label column {label_column!r}; available columns: {list(header)}"
        )
    k = int(label_column)
    if not -len(header) <= k < len(header):
        raise DataError(
            f"label column index {k} out of range for {len(header)} columns: {list(header)}"
        )
    return k % len(header)


def parse_features(path, header, rows, columns) -> np.ndarray:
    X = np.empty((len(rows), len(columns)))
    for r, row in enumerate(rows):
        for j, c in enumerate(columns):
            cell = row[c].strip()
            try:
                value = float(cell)
            except ValueError:
                value = None
            if value is None or not np.isfinite(value):
                raise DataError(
                    f"{path}: cannot parse {cell!r} as a finite number at row {r + 1}, "
                    f"column {header[c]}"
                )
            X[r, j] = value
    return X


def read_labeled_table(path, label_column: LabelColumn = -1, require_labels: bool = True):
    """Features, raw labels (``None`` if absent) and feature names of a CSV file.

    With ``require_labels=False`` a file lacking a label column named
    ``label_column`` is read as unlabeled objects.
    """
    header, rows = read_csv(path)
    if not require_labels and isinstance(label_column, str) and label_column not in header:
        columns = list(range(len(header)))
        return parse_features(path, header, rows, columns), None, header
    k = resolve_label_column(header, label_column)
    columns = [c for c in range(len(header)) if c != k]
    if not columns:
        raise DataError(f"{path}: no feature columns besides the label column")
    X = parse_features(path, header, rows, columns)
    labels = [row[k].strip() for row in rows]
    return X, labels, [header[c] for c in columns]


def load_csv(path, label_column: LabelColumn = -1) -> Dataset:
    """Load a labeled dataset; the label column is given by name or index (default last).

    Feature columns keep their file order; classes are indexed by first
    appearance.
    """
    X, labels, _ = read_labeled_table(path, label_column)
    if X.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    return make_dataset(X, labels)


def write_dataset(data: Dataset, path, feature_names: Optional[Sequence[str]] = None,
                  label_name: str = "label") -> None:
    names = list(feature_names) if feature_names else [f"x{j + 1}" for j in range(data.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, label_name])
        for x, lab in zip(data.features, data.raw_labels()):
            w.writerow([*(format_float(v) for v in x), lab])


def write_pvalues(pvalues: PValueMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(lab) for lab in pvalues.label_space.labels])
        for row in pvalues.values:
            w.writerow([format_float(v) for v in row])


def write_regions(pvalues: PValueMatrix, epsilon: float, path) -> None:
    """One row per test object: members joined by ``;`` and the region kind."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "members", "kind"])
        for i, region in enumerate(pvalues.regions(epsilon)):
            members = pvalues.label_space.decode(sorted(region.members))
            w.writerow([i, ";".join(str(m) for m in members), region.kind])


def write_calibration(curve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "error_rate"])
        for eps, er in curve:
            w.writerow([format_float(eps), format_float(er)])


def synthetic_blobs(n_per_class: int, centers, spread: float, seed: int) -> Dataset:
    """Isotropic Gaussian blobs, one class (named ``"0"``, ``"1"``, ...) per center.

    Rows are i.i.d. draws in shuffled order, so any subset is exchangeable.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.shape[0] < 2:
        raise ConformalError("at least 2 centers are required")
    if not np.all(np.isfinite(centers)):
        raise ConformalError("centers must be finite")
    if not (isinstance(n_per_class, (int, np.integer)) and n_per_class >= 1):
        raise ConformalError(f"n_per_class must be a positive integer, got {n_per_class!r}")
    if not (np.isfinite(spread) and spread > 0):
        raise ConformalError(f"spread must be positive, got {spread}")
    rng = np.random.default_rng(check_seed(seed))
    k, p = centers.shape
    X = np.repeat(centers, n_per_class, axis=0) + spread * rng.standard_normal((k * n_per_class, p))
    labels = np.repeat(np.arange(k), n_per_class)
    order = rng.permutation(labels.size)
    return make_dataset(X[order], [str(c) for c in labels[order]])


def generate_synthetic(n_per_class: int, centers, spread: float, seed: int, out_path) -> Dataset:
    """Write :func:`synthetic_blobs` to ``out_path`` in the :func:`load_csv` format."""
    data = synthetic_blobs(n_per_class, centers, spread, seed)
    write_dataset(data, out_path)
    return data
