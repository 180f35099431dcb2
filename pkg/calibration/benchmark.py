"""
Benchmark harness: stratified cross-validation of calibrators and the Friedman
test with Holm's step-down post-hoc comparison against a control method.
"""
import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import chi2, norm, rankdata

from .calibrators import build_calibrator
from .core import CalibrationDataset
from .errors import InvalidInputError, InvalidParameterError
from .metrics import RELIABILITY_BINS, MetricsReport, evaluate

logger = logging.getLogger("ENIR.benchmark")

METRIC_NAMES = ("auc", "acc", "rmse", "ece", "mce")


class Significance(str, Enum):
    """Verdict of one method compared with the control."""
    SUPERIOR = "superior"
    INFERIOR = "inferior"
    NOT_SIGNIFICANT = "not-significant"


@dataclass(frozen=True)
class RankMatrix:
    """Average ranks per dataset (rows) and method (columns); rank 1 is best."""
    ranks: np.ndarray
    methods: Tuple[str, ...] = ()
    datasets: Tuple[str, ...] = ()

    def __post_init__(self):
        ranks = np.array(self.ranks, dtype=float)
        if ranks.ndim != 2:
            raise InvalidInputError("a rank matrix must be two-dimensional")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)
        d, k = ranks.shape
        methods = tuple(self.methods) or tuple(f"method_{j}" for j in range(k))
        datasets = tuple(self.datasets) or tuple(f"dataset_{i}" for i in range(d))
        if len(methods) != k or len(datasets) != d:
            raise InvalidInputError("method and dataset names must match the matrix shape")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "datasets", datasets)

    @classmethod
    def from_scores(cls, scores, higher_is_better: bool = False,
                    methods: Sequence[str] = (), datasets: Sequence[str] = ()) -> "RankMatrix":
        """
        Rank raw per-dataset results.

        Args:
            scores: Matrix of metric values, datasets by methods
            higher_is_better: Rank the largest value first (AUC, ACC)
            methods: Column names
            datasets: Row names

        Returns:
            RankMatrix with ties sharing their mean rank
        """
        scores = np.asarray(scores, dtype=float)
        if scores.ndim != 2:
            raise InvalidInputError("scores must be a datasets-by-methods matrix")
        if not np.all(np.isfinite(scores)):
            raise InvalidInputError("scores must be finite")
        oriented = -scores if higher_is_better else scores
        return cls(rankdata(oriented, method="average", axis=1), tuple(methods), tuple(datasets))

    @property
    def n_datasets(self) -> int:
        return int(self.ranks.shape[0])

    @property
    def n_methods(self) -> int:
        return int(self.ranks.shape[1])

    @property
    def mean_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)


@dataclass(frozen=True)
class PairwiseComparison:
    method: str
    mean_rank: float
    z: float
    p_value: float
    adjusted_p: float
    verdict: Significance


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    significant: bool
    alpha: float
    control: str
    mean_ranks: Dict[str, float]
    comparisons: Tuple[PairwiseComparison, ...] = field(default_factory=tuple)

    def verdicts(self) -> Dict[str, Significance]:
        """Per-method verdict; the control itself is never significant."""
        result = {name: Significance.NOT_SIGNIFICANT for name in self.mean_ranks}
        result.update({c.method: c.verdict for c in self.comparisons})
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "significant": self.significant,
            "alpha": self.alpha,
            "control": self.control,
            "mean_ranks": dict(self.mean_ranks),
            "comparisons": [
                {
                    "method": c.method,
                    "mean_rank": c.mean_rank,
                    "z": c.z,
                    "p_value": c.p_value,
                    "adjusted_p": c.adjusted_p,
                    "verdict": c.verdict.value,
                }
                for c in self.comparisons
            ],
        }


def friedman_statistic(mean_ranks: Sequence[float], n_datasets: int) -> float:
    """Friedman chi-square statistic from mean ranks over n_datasets."""
    r = np.asarray(mean_ranks, dtype=float)
    k = r.size
    value = 12.0 * n_datasets / (k * (k + 1)) * (float(np.sum(r ** 2)) - k * (k + 1) ** 2 / 4.0)
    # Identical ranks give an exact zero up to rounding
    return max(value, 0.0)


def friedman_holm_from_mean_ranks(mean_ranks: Sequence[float], n_datasets: int,
                                  alpha: float = 0.05, control: int = 0,
                                  methods: Sequence[str] = ()) -> FriedmanResult:
    """
    Friedman test followed by Holm's step-down comparison with a control.

    Each other method is compared with the control through
    z = (R_j - R_control) / sqrt(k(k+1) / (6D)) and a two-sided normal p-value.
    Holm-adjusted p-values at or below alpha are significant; the direction
    follows the mean-rank ordering (lower rank is better).

    Args:
        mean_ranks: Mean rank of every method
        n_datasets: Number of datasets D the ranks average over
        alpha: Significance level
        control: Index of the control method
        methods: Method names

    Returns:
        FriedmanResult
    """
    r = np.asarray(mean_ranks, dtype=float)
    k = r.size
    if k < 2:
        raise InvalidParameterError("the Friedman test needs at least two methods")
    if n_datasets < 2:
        raise InvalidParameterError("the Friedman test needs at least two datasets")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 <= control < k:
        raise InvalidParameterError(f"control index {control} outside 0..{k - 1}")
    names = tuple(methods) or tuple(f"method_{j}" for j in range(k))
    if len(names) != k:
        raise InvalidInputError("one name per method is required")

    statistic = friedman_statistic(r, n_datasets)
    p_value = float(chi2.sf(statistic, k - 1))
    significant = p_value <= alpha
    logger.info(f"Friedman chi2={statistic:.4f} (df={k - 1}, p={p_value:.4g}) over {n_datasets} datasets")

    others = [j for j in range(k) if j != control]
    se = math.sqrt(k * (k + 1) / (6.0 * n_datasets))
    z_values = [(r[j] - r[control]) / se for j in others]
    p_values = [float(2.0 * norm.sf(abs(z))) for z in z_values]

    # Holm step-down: adjusted p is the running max of (m - i) * p_(i), capped at 1
    m = len(others)
    adjusted = [1.0] * m
    running = 0.0
    for i, idx in enumerate(sorted(range(m), key=lambda t: p_values[t])):
        running = max(running, min(1.0, (m - i) * p_values[idx]))
        adjusted[idx] = running

    comparisons = []
    for pos, j in enumerate(others):
        if significant and adjusted[pos] <= alpha and r[j] != r[control]:
            verdict = Significance.INFERIOR if r[j] > r[control] else Significance.SUPERIOR
        else:
            verdict = Significance.NOT_SIGNIFICANT
        comparisons.append(PairwiseComparison(
            method=names[j],
            mean_rank=float(r[j]),
            z=float(z_values[pos]),
            p_value=p_values[pos],
            adjusted_p=float(adjusted[pos]),
            verdict=verdict,
        ))

    return FriedmanResult(
        statistic=float(statistic),
        p_value=p_value,
        significant=significant,
        alpha=alpha,
        control=names[control],
        mean_ranks={names[j]: float(r[j]) for j in range(k)},
        comparisons=tuple(comparisons),
    )


def friedman_holm(rank_matrix: RankMatrix, alpha: float = 0.05, control: int = 0) -> FriedmanResult:
    """Friedman + Holm over a RankMatrix; see friedman_holm_from_mean_ranks."""
    return friedman_holm_from_mean_ranks(
        rank_matrix.mean_ranks, rank_matrix.n_datasets, alpha, control, rank_matrix.methods
    )


def stratified_folds(labels, folds: int, rng: np.random.Generator) -> np.ndarray:
    """
    Assign every instance to a fold, preserving the positive rate.

    Each class is shuffled and dealt round-robin; negatives continue where the
    positives stopped, so fold sizes and per-class counts differ by at most one.

    Args:
        labels: Binary labels
        folds: Number of folds
        rng: Seeded generator

    Returns:
        Fold index of every instance
    """
    labels = np.asarray(labels)
    assignment = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for value in (1, 0):
        members = rng.permutation(np.flatnonzero(labels == value))
        assignment[members] = (np.arange(members.size) + offset) % folds
        offset = (offset + members.size) % folds
    return assignment


@dataclass(frozen=True)
class FoldResult:
    repeat: int
    fold: int
    n_train: int
    report: MetricsReport

    def to_dict(self) -> Dict[str, Any]:
        return {"repeat": self.repeat, "fold": self.fold, "n_train": self.n_train,
                **self.report.to_dict(include_bins=False)}


def _run_fold(dataset: CalibrationDataset, assignment: np.ndarray, repeat: int, fold: int,
              method: str, k: int, threshold: float, options: Dict[str, Any]) -> FoldResult:
    test = assignment == fold
    train_set = dataset.subset(np.flatnonzero(~test))
    calibrator = build_calibrator(method, **options).fit(train_set)
    preds = calibrator.predict(dataset.scores[test])
    report = evaluate(preds, dataset.labels[test], k=k, threshold=threshold)
    return FoldResult(repeat=repeat, fold=fold, n_train=train_set.n, report=report)


def cross_validate(dataset: CalibrationDataset, folds: int = 10, repeats: int = 1,
                   method: str = "enir", seed: int = 0, n_jobs: int = 1,
                   k: int = RELIABILITY_BINS, threshold: float = 0.5,
                   **options) -> List[FoldResult]:
    """
    Stratified k-fold cross-validation of one calibration method.

    Args:
        dataset: Scores in [0, 1] with labels
        folds: Number of folds, 2 <= folds <= N
        repeats: Independent reshuffles
        method: Calibrator name (enir, isoreg, hist, none)
        seed: Seed of the fold shuffling
        n_jobs: Worker threads; results keep (repeat, fold) order
        k: Reliability bins of every report
        threshold: Accuracy threshold
        **options: Passed to the calibrator (e.g. bins for hist)

    Returns:
        One FoldResult per (repeat, fold)
    """
    if folds < 2:
        raise InvalidParameterError(f"at least two folds are required, got {folds}")
    if folds > dataset.n:
        raise InvalidParameterError(f"{folds} folds exceed the {dataset.n} samples")
    if repeats < 1:
        raise InvalidParameterError(f"repeats must be positive, got {repeats}")
    if n_jobs < 1:
        raise InvalidParameterError(f"n_jobs must be positive, got {n_jobs}")

    rng = np.random.default_rng(seed)
    tasks = []
    for repeat in range(repeats):
        assignment = stratified_folds(dataset.labels, folds, rng)
        tasks.extend((assignment, repeat, fold) for fold in range(folds))

    # Threads share the dataset; Parallel returns results in task order
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_run_fold)(dataset, assignment, repeat, fold, method, k, threshold, options)
        for assignment, repeat, fold in tasks
    )

    logger.info(f"Cross-validated {method} with {folds} folds x {repeats} repeats on {dataset.n} samples")
    return results


def summarize(results: Sequence[FoldResult]) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Mean and sample standard deviation of every metric over folds.

    Folds with an undefined AUC are left out of the AUC summary.
    """
    summary: Dict[str, Dict[str, Optional[float]]] = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(r.report, name) for r in results
                           if getattr(r.report, name) is not None], dtype=float)
        if values.size == 0:
            summary[name] = {"mean": None, "sd": None}
            continue
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        summary[name] = {"mean": float(values.mean()), "sd": sd}
    return summary
