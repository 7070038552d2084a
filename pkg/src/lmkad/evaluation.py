"""Benchmark protocol: Gmean, repeated CV with grid search, rank statistics.

The experiment loop is: for every (run, fold) pair, train one model per
grid candidate on the target-class training rows, score each candidate by
Gmean on the validation rows (training-fold rows of both classes), keep
the best, and evaluate it once on the held-out test fold.  Aggregates
(MGmean, PMG) and the Friedman / Iman-Davenport test compare classifiers
across datasets.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .dataset import Dataset, FoldPlan, split_for_occ
from .models import (
    LmkadConfig,
    predict_batch,
    resolve_kernels,
    sv_count,
    train_lmkad,
    train_mkad,
    train_ocsvm,
)

DEFAULT_NU_GRID = (0.02, 0.05, 0.1, 0.2, 0.3)


@dataclass(frozen=True)
class ConfusionCounts:
    """Confusion counts with the target class (+1) as positive."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("counts must be nonnegative")
        if self.tp + self.fp + self.tn + self.fn == 0:
            raise ValueError("all counts are zero")

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true).ravel()
        y_pred = np.asarray(y_pred).ravel()
        if y_true.shape != y_pred.shape:
            raise ValueError("label/prediction length mismatch")
        return cls(
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
            fp=int(np.sum((y_true == -1) & (y_pred == 1))),
            tn=int(np.sum((y_true == -1) & (y_pred == -1))),
            fn=int(np.sum((y_true == 1) & (y_pred == -1))),
        )


def gmean(counts: ConfusionCounts) -> float:
    """sqrt(precision * recall); zero-division cases score 0, never NaN."""
    if counts.tp == 0:
        return 0.0
    precision = counts.tp / (counts.tp + counts.fp)
    recall = counts.tp / (counts.tp + counts.fn)
    return math.sqrt(precision * recall)


@dataclass(frozen=True)
class ClassifierConfig:
    """One benchmark column: a model family plus its fixed settings.

    ``kernels`` is a preset name ("gpl"/"gpp"), a comma-joined token
    string, or an explicit sequence of kernel tokens.  LMKAD knobs are
    ignored by the other families.
    """

    name: str
    family: str  # ocsvm | mkad | lmkad
    kernels: str | tuple = "gauss:auto"
    gating: str = "sigmoid"
    learning_rate: float = 20.0
    lr_decay: float = 0.95
    outer_tol: float = 1e-4
    max_outer: int = 100
    inner_tol: float = 1e-6
    rho_mode: str = "margin"

    def __post_init__(self):
        if self.family not in ("ocsvm", "mkad", "lmkad"):
            raise ValueError(f"unknown model family {self.family!r}")


def train_for_config(config: ClassifierConfig, train_targets, nu: float, seed: int):
    """Train one model of the configured family at a given nu."""
    kernels = resolve_kernels(config.kernels)
    if config.family == "ocsvm":
        if len(kernels) != 1:
            raise ValueError("ocsvm takes exactly one kernel")
        return train_ocsvm(train_targets, kernels[0], nu, tol=config.inner_tol, rho_mode=config.rho_mode)
    if config.family == "mkad":
        return train_mkad(train_targets, kernels, nu, tol=config.inner_tol, rho_mode=config.rho_mode)
    lmkad_cfg = LmkadConfig(
        nu=nu,
        gating_kind=config.gating,
        learning_rate=config.learning_rate,
        lr_decay=config.lr_decay,
        outer_tol=config.outer_tol,
        max_outer=config.max_outer,
        inner_tol=config.inner_tol,
        seed=seed,
        rho_mode=config.rho_mode,
    )
    return train_lmkad(train_targets, kernels, lmkad_cfg)


def _derived_seed(base_seed: int, run: int, fold: int, grid_index: int) -> int:
    ss = np.random.SeedSequence([int(base_seed), run, fold, grid_index])
    return int(ss.generate_state(1)[0])


@dataclass
class FoldOutcome:
    run: int
    fold: int
    chosen_nu: float | None
    validation_gmean: float | None
    test_gmean: float | None
    sv_pct: float | None
    error: str | None = None


@dataclass
class CvResult:
    """Aggregate of one (dataset, classifier) benchmark cell."""

    dataset: str
    classifier: str
    mean_gmean: float
    std_gmean: float
    mean_sv_pct: float
    folds: list[FoldOutcome] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def sv_fraction(model) -> float:
    """Support vectors as a percentage of the training size."""
    return 100.0 * sv_count(model) / model.n_train


def _score(model, data: Dataset) -> float:
    return gmean(ConfusionCounts.from_predictions(data.labels, predict_batch(model, data.features)))


def cross_validate(
    dataset: Dataset,
    config: ClassifierConfig,
    nu_grid,
    plan: FoldPlan,
    base_seed: int = 0,
) -> CvResult:
    """Run the full repeated-CV grid-search protocol for one classifier.

    Grid candidates that cannot be trained on a fold (e.g. nu*N < 1) are
    skipped for that fold; ties on validation Gmean keep the first grid
    point.  Folds where every candidate fails are flagged and excluded
    from the aggregate.
    """
    nu_grid = list(nu_grid)
    if not nu_grid:
        raise ValueError("empty hyperparameter grid")

    outcomes: list[FoldOutcome] = []
    warnings: list[str] = []
    warned_single_class = False
    skipped_candidates: dict[float, int] = {}
    for run in range(plan.n_runs):
        for fold in range(plan.n_folds):
            train_targets, validation, test = split_for_occ(dataset, plan, run, fold)
            if not warned_single_class and np.all(validation.labels == 1):
                warnings.append(
                    f"validation folds contain no outlier rows; "
                    f"candidate scoring degrades to recall only ({dataset.name})"
                )
                warned_single_class = True

            best = None
            fold_errors = []
            for gi, nu in enumerate(nu_grid):
                try:
                    model = train_for_config(
                        config, train_targets, nu, seed=_derived_seed(base_seed, run, fold, gi)
                    )
                except (ValueError, RuntimeError) as exc:
                    fold_errors.append(f"nu={nu}: {exc}")
                    skipped_candidates[nu] = skipped_candidates.get(nu, 0) + 1
                    continue
                score = _score(model, validation)
                if best is None or score > best[0]:
                    best = (score, nu, model)

            if best is None:
                msg = "; ".join(fold_errors) or "no candidate trained"
                outcomes.append(FoldOutcome(run, fold, None, None, None, None, error=msg))
                warnings.append(f"run {run} fold {fold} skipped: {msg}")
                continue
            val_score, chosen_nu, model = best
            outcomes.append(
                FoldOutcome(
                    run=run,
                    fold=fold,
                    chosen_nu=chosen_nu,
                    validation_gmean=val_score,
                    test_gmean=_score(model, test),
                    sv_pct=sv_fraction(model),
                )
            )

    n_cells = plan.n_runs * plan.n_folds
    for nu, count in sorted(skipped_candidates.items()):
        warnings.append(f"grid point nu={nu} skipped on {count}/{n_cells} folds")

    ok = [o for o in outcomes if o.error is None]
    if ok:
        gs = np.array([o.test_gmean for o in ok])
        svs = np.array([o.sv_pct for o in ok])
        mean_g = float(gs.mean())
        std_g = float(gs.std(ddof=1)) if gs.size > 1 else 0.0
        mean_sv = float(svs.mean())
    else:
        mean_g = std_g = mean_sv = float("nan")
    return CvResult(
        dataset=dataset.name,
        classifier=config.name,
        mean_gmean=mean_g,
        std_gmean=std_g,
        mean_sv_pct=mean_sv,
        folds=outcomes,
        warnings=warnings,
    )


# --- aggregate statistics --------------------------------------------------


def _check_matrix(matrix) -> np.ndarray:
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-D datasets x classifiers matrix")
    if not np.isfinite(M).all():
        raise ValueError("score matrix has missing or non-finite cells")
    return M


def mgmean(matrix) -> np.ndarray:
    """Per-classifier mean score over all datasets (column means)."""
    return _check_matrix(matrix).mean(axis=0)


def pmg(matrix) -> np.ndarray:
    """Mean percentage of the per-dataset maximum score, per classifier."""
    M = _check_matrix(matrix)
    row_max = M.max(axis=1, keepdims=True)
    if np.any(row_max <= 0):
        raise ValueError("every dataset row needs a positive maximum")
    return (100.0 * M / row_max).mean(axis=0)


@dataclass
class FriedmanReport:
    avg_ranks: np.ndarray
    chi_sq: float
    f_stat: float
    p_value: float
    n_datasets: int
    n_classifiers: int
    df1: int
    df2: int
    degenerate: bool = False


def friedman_statistics(avg_ranks, n_datasets: int) -> FriedmanReport:
    """Friedman chi-square and Iman-Davenport F from average ranks.

    When the chi-square reaches its ceiling N*(k-1) the F denominator
    vanishes; the report then carries +inf with the degenerate flag.
    """
    ranks = np.asarray(avg_ranks, dtype=float).ravel()
    k = ranks.shape[0]
    n = int(n_datasets)
    if k < 2:
        raise ValueError("need >= 2 classifiers")
    if n < 2:
        raise ValueError("need >= 2 datasets")
    chi_sq = (12.0 * n / (k * (k + 1))) * (np.sum(ranks**2) - k * (k + 1) ** 2 / 4.0)
    chi_sq = float(chi_sq)
    df1, df2 = k - 1, (k - 1) * (n - 1)
    denom = n * (k - 1) - chi_sq
    if denom <= 1e-12:
        return FriedmanReport(ranks, chi_sq, float("inf"), 0.0, n, k, df1, df2, degenerate=True)
    f_stat = (n - 1) * chi_sq / denom
    p_value = float(_sps.f.sf(f_stat, df1, df2))
    return FriedmanReport(ranks, chi_sq, f_stat, p_value, n, k, df1, df2)


def friedman_test(matrix) -> FriedmanReport:
    """Rank classifiers per dataset (1 = best, ties averaged) and test.

    Input is an N x k score matrix with one row per dataset and one
    column per classifier; higher scores are better.
    """
    M = _check_matrix(matrix)
    n, k = M.shape
    if k < 2:
        raise ValueError("need >= 2 classifiers")
    if n < 2:
        raise ValueError("need >= 2 datasets")
    ranks = np.vstack([_sps.rankdata(-row, method="average") for row in M])
    return friedman_statistics(ranks.mean(axis=0), n)


# --- CSV emission ----------------------------------------------------------


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.12g}"


def write_results_csv(results: list[CvResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "classifier", "mean_gmean", "std_gmean", "mean_sv_pct"])
        for r in results:
            writer.writerow([r.dataset, r.classifier, _fmt(r.mean_gmean), _fmt(r.std_gmean), _fmt(r.mean_sv_pct)])


def write_gmean_matrix_csv(dataset_names, classifier_names, matrix, path) -> None:
    M = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", *classifier_names])
        for name, row in zip(dataset_names, M):
            writer.writerow([name, *(_fmt(v) for v in row)])


def write_ranks_csv(classifier_names, report: FriedmanReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["classifier", "avg_rank"])
        for name, rank in zip(classifier_names, report.avg_ranks):
            writer.writerow([name, _fmt(rank)])


def write_friedman_csv(report: FriedmanReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chi_sq", "f_stat", "p_value", "df1", "df2", "degenerate"])
        writer.writerow(
            [
                _fmt(report.chi_sq),
                "inf" if math.isinf(report.f_stat) else _fmt(report.f_stat),
                _fmt(report.p_value),
                report.df1,
                report.df2,
                int(report.degenerate),
            ]
        )


def read_gmean_matrix_csv(path):
    """Read a wide score matrix (first column dataset, rest classifiers).

    Long-format benchmark results (dataset, classifier, mean_gmean, ...)
    are pivoted automatically.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row plus at least one data row")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]

    if header[:3] == ["dataset", "classifier", "mean_gmean"]:
        datasets, classifiers = [], []
        cells = {}
        for row in body:
            d, c, g = row[0], row[1], float(row[2])
            if d not in datasets:
                datasets.append(d)
            if c not in classifiers:
                classifiers.append(c)
            cells[(d, c)] = g
        M = np.full((len(datasets), len(classifiers)), np.nan)
        for (d, c), g in cells.items():
            M[datasets.index(d), classifiers.index(c)] = g
        if np.isnan(M).any():
            raise ValueError(f"{path}: incomplete dataset x classifier matrix")
        return datasets, classifiers, M

    classifiers = header[1:]
    if not classifiers:
        raise ValueError(f"{path}: no classifier columns")
    datasets = [row[0] for row in body]
    try:
        M = np.array([[float(cell) for cell in row[1:]] for row in body])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric score cell ({exc})") from None
    if M.shape[1] != len(classifiers):
        raise ValueError(f"{path}: ragged rows")
    return datasets, classifiers, M
