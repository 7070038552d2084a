"""Dataset ingestion, one-class views, z-score normalization, fold planning.

A dataset is a plain feature matrix with +1 (target) / -1 (outlier)
labels.  Cross-validation folds are planned once per experiment, stratified
by class, and reused for every classifier so all models see identical
splits.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

#: population stddevs below this are treated as constant columns
DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus one-class labels (+1 target, -1 outlier)."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        feats = np.atleast_2d(np.asarray(self.features, dtype=float))
        labels = np.asarray(self.labels, dtype=int).ravel()
        if feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ValueError("dataset needs at least one row and one column")
        if labels.shape[0] != feats.shape[0]:
            raise ValueError(f"{labels.shape[0]} labels for {feats.shape[0]} rows")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be +1 or -1")
        if not np.any(labels == 1):
            raise ValueError("one-class view needs at least one target (+1) row")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        """(#targets, #outliers)."""
        n_t = int(np.sum(self.labels == 1))
        return n_t, self.labels.size - n_t


@dataclass(frozen=True)
class Normalizer:
    """Per-column z-score statistics fitted on training targets.

    Constant columns get stddev 1 (mean kept), so the data they were fit
    on maps to zeros instead of raising.
    """

    means: np.ndarray
    stddevs: np.ndarray


def fit_normalizer(features: np.ndarray) -> Normalizer:
    """Column means and population (1/N) stddevs, degenerate-safe."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.size == 0:
        raise ValueError("cannot fit a normalizer on an empty matrix")
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # population convention
    stds = np.where(stds < DEGENERATE_STD, 1.0, stds)
    return Normalizer(means=means, stddevs=stds)


def apply_normalizer(norm: Normalizer, features: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != norm.means.shape[0]:
        raise ValueError(f"normalizer fitted on {norm.means.shape[0]} columns, got {X.shape[1]}")
    return (X - norm.means) / norm.stddevs


def load_csv(
    path,
    label_column,
    target_label,
    has_header: bool = False,
    name: str | None = None,
) -> Dataset:
    """Load a delimited numeric file into a one-class view.

    ``label_column`` is a 0-based column index, or a column name when
    ``has_header`` is set.  Rows whose label cell equals ``target_label``
    (string comparison on the raw token) become +1, everything else -1.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"no such data file: {path}") from None
    with fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError(f"{path}: file contains no data rows")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: file contains only a header row")

    if isinstance(label_column, str):
        if header is None:
            raise ValueError("label column given by name but the file has no header")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ValueError(f"{path}: no column named {label_column!r} in header") from None
    else:
        label_idx = int(label_column)

    width = len(rows[0])
    if not -width <= label_idx < width:
        raise ValueError(f"{path}: label column {label_idx} out of range for {width} columns")
    label_idx %= width

    target = str(target_label).strip()
    features = []
    labels = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        cells = [c.strip() for c in row]
        labels.append(1 if cells[label_idx] == target else -1)
        feat_row = []
        for c, cell in enumerate(cells):
            if c == label_idx:
                continue
            try:
                feat_row.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at row {r}, column {c}") from None
        features.append(feat_row)

    labels = np.asarray(labels)
    if not np.any(labels == 1):
        raise ValueError(f"{path}: target label {target!r} never occurs in the label column")
    if name is None:
        name = str(path)
    return Dataset(features=np.asarray(features, dtype=float), labels=labels, name=name)


def load_features_csv(path, has_header: bool = False, label_column=None) -> np.ndarray:
    """Load a feature-only matrix; optionally drop one label column.

    Returns an (N, d) array; N may be zero for an empty file.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"no such data file: {path}") from None
    with fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    header = None
    if has_header and rows:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        return np.empty((0, 0))

    width = len(rows[0])
    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None:
                raise ValueError("label column given by name but the file has no header")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column) % width

    features = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        feat_row = []
        for c, cell in enumerate(row):
            if c == label_idx:
                continue
            try:
                feat_row.append(float(cell.strip()))
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at row {r}, column {c}") from None
        features.append(feat_row)
    return np.asarray(features, dtype=float)


@dataclass(frozen=True)
class FoldPlan:
    """Per-run, per-sample fold indices, stratified by class.

    The plan is a pure function of (seed, n_runs, n_folds, N, labels), so
    every classifier in an experiment trains and tests on identical splits.
    """

    n_runs: int
    n_folds: int
    seed: int
    assignments: np.ndarray = field(repr=False)  # (n_runs, N) ints in [0, n_folds)


def plan_folds(dataset: Dataset, n_folds: int, n_runs: int, seed: int) -> FoldPlan:
    """Stratified repeated fold assignment, deterministic in the seed.

    Each class present in the data must have at least ``n_folds`` members
    so every fold sees every class; a class that is entirely absent (e.g.
    a one-class view with no outliers) is allowed.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_runs < 1:
        raise ValueError("need at least 1 run")
    labels = dataset.labels
    for cls in (1, -1):
        size = int(np.sum(labels == cls))
        if 0 < size < n_folds:
            raise ValueError(
                f"class {cls:+d} has {size} members, fewer than {n_folds} folds"
            )

    assignments = np.empty((n_runs, labels.size), dtype=np.int64)
    for run in range(n_runs):
        rng = np.random.default_rng([int(seed), run])
        for cls in (1, -1):
            idx = np.flatnonzero(labels == cls)
            if idx.size == 0:
                continue
            perm = rng.permutation(idx)
            fold_ids = np.resize(np.arange(n_folds), idx.size)
            rng.shuffle(fold_ids)
            assignments[run, perm] = fold_ids
    return FoldPlan(n_runs=n_runs, n_folds=n_folds, seed=int(seed), assignments=assignments)


def split_for_occ(dataset: Dataset, plan: FoldPlan, run: int, test_fold: int):
    """One-class train/validation/test split for a (run, fold) pair.

    Returns ``(train_targets, validation, test)``: the target-class rows of
    the non-test folds as a bare matrix, the full non-test folds (both
    classes) as the validation set for hyperparameter scoring, and the
    whole test fold.
    """
    if not 0 <= run < plan.n_runs:
        raise IndexError(f"run {run} out of range [0, {plan.n_runs})")
    if not 0 <= test_fold < plan.n_folds:
        raise IndexError(f"fold {test_fold} out of range [0, {plan.n_folds})")
    folds = plan.assignments[run]
    test_mask = folds == test_fold
    train_mask = ~test_mask
    target_mask = dataset.labels == 1

    train_targets = dataset.features[train_mask & target_mask]
    validation = Dataset(
        features=dataset.features[train_mask],
        labels=dataset.labels[train_mask],
        name=f"{dataset.name}[run{run}/fold{test_fold}/val]",
    )
    test = Dataset(
        features=dataset.features[test_mask],
        labels=dataset.labels[test_mask],
        name=f"{dataset.name}[run{run}/fold{test_fold}/test]",
    )
    return train_targets, validation, test
