"""
Calibration and discrimination metrics: reliability bins, ECE, MCE, RMSE,
accuracy and AUC, bundled into a MetricsReport.
"""
import io
import csv
import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError, InvalidParameterError, UndefinedMetricError

logger = logging.getLogger("ENIR.metrics")

RELIABILITY_BINS = 10


@dataclass(frozen=True)
class ReliabilityBin:
    """One fixed-width bin of the prediction interval."""
    index: int
    weight: float
    mean_pred: float
    frac_pos: float
    count: int

    @property
    def empty(self) -> bool:
        return self.count == 0

    @property
    def gap(self) -> float:
        return abs(self.frac_pos - self.mean_pred)


@dataclass(frozen=True)
class MetricsReport:
    """Metrics of one set of predictions; auc is None when labels hold one class."""
    ece: float
    mce: float
    rmse: float
    auc: Optional[float]
    acc: float
    n: int
    bins: Tuple[ReliabilityBin, ...]

    def to_dict(self, include_bins: bool = True) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "auc": self.auc,
            "acc": self.acc,
            "rmse": self.rmse,
            "ece": self.ece,
            "mce": self.mce,
            "n": self.n,
        }
        if include_bins:
            document["bins"] = [asdict(b) for b in self.bins]
        return document

    def reliability_csv(self) -> str:
        """Reliability bins as `k,weight,mean_pred,frac_pos` CSV."""
        return reliability_csv(self.bins)


def _check_pair(preds, labels) -> Tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(preds, dtype=float)
    labels = np.asarray(labels)
    if preds.ndim != 1 or preds.shape != labels.shape:
        raise InvalidInputError("predictions and labels must be 1-D and of equal length")
    if preds.size == 0:
        raise InvalidInputError("at least one prediction is required")
    if np.any((labels != 0) & (labels != 1)):
        raise InvalidInputError("labels must be 0 or 1")
    return preds, labels.astype(float)


def reliability(preds, labels, k: int = RELIABILITY_BINS) -> Tuple[ReliabilityBin, ...]:
    """
    Fixed-width reliability bins [0, 1/k], (1/k, 2/k], ..., ((k-1)/k, 1].

    Args:
        preds: Predicted probabilities in [0, 1]
        labels: Binary labels
        k: Number of bins

    Returns:
        k ReliabilityBins; empty bins carry weight 0
    """
    preds, labels = _check_pair(preds, labels)
    if k < 1:
        raise InvalidParameterError(f"number of reliability bins must be positive, got {k}")
    if np.any(~np.isfinite(preds)) or np.any(preds < 0.0) or np.any(preds > 1.0):
        raise InvalidInputError("predictions must lie in [0, 1]")

    edges = np.linspace(0.0, 1.0, k + 1)
    which = np.searchsorted(edges[1:-1], preds, side="left")
    counts = np.bincount(which, minlength=k)
    pred_sums = np.bincount(which, weights=preds, minlength=k)
    pos_sums = np.bincount(which, weights=labels, minlength=k)
    safe = np.maximum(counts, 1)

    return tuple(
        ReliabilityBin(
            index=i + 1,
            weight=float(counts[i] / preds.size),
            mean_pred=float(pred_sums[i] / safe[i]),
            frac_pos=float(pos_sums[i] / safe[i]),
            count=int(counts[i]),
        )
        for i in range(k)
    )


def ece(bins: Sequence[ReliabilityBin]) -> float:
    """Expected calibration error: bin-weight average of |o_k - e_k|."""
    return float(sum(b.weight * b.gap for b in bins if not b.empty))


def mce(bins: Sequence[ReliabilityBin]) -> float:
    """Maximum calibration error over non-empty bins."""
    gaps = [b.gap for b in bins if not b.empty]
    return float(max(gaps)) if gaps else 0.0


def rmse(preds, labels) -> float:
    preds, labels = _check_pair(preds, labels)
    return float(np.sqrt(np.mean((preds - labels) ** 2)))


def acc(preds, labels, threshold: float = 0.5) -> float:
    """Fraction of instances where (pred >= threshold) equals the label."""
    preds, labels = _check_pair(preds, labels)
    return float(np.mean((preds >= threshold) == (labels == 1.0)))


def auc(preds, labels) -> float:
    """
    Area under the ROC curve as the Mann-Whitney statistic.

    Tied predictions earn half credit through average ranks.

    Args:
        preds: Scores or probabilities
        labels: Binary labels with both classes present

    Returns:
        AUC in [0, 1]
    """
    preds, labels = _check_pair(preds, labels)
    positive = labels == 1.0
    n_pos = int(positive.sum())
    n_neg = preds.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative label")
    ranks = rankdata(preds, method="average")
    u_statistic = float(ranks[positive].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (n_pos * n_neg)


def evaluate(preds, labels, k: int = RELIABILITY_BINS, threshold: float = 0.5) -> MetricsReport:
    """
    Compute every metric for one set of predictions.

    Args:
        preds: Predicted probabilities in [0, 1]
        labels: Binary labels
        k: Number of reliability bins
        threshold: Decision threshold for accuracy

    Returns:
        MetricsReport
    """
    bins = reliability(preds, labels, k)
    try:
        auc_value: Optional[float] = auc(preds, labels)
    except UndefinedMetricError:
        logger.debug("AUC undefined: labels hold a single class")
        auc_value = None
    return MetricsReport(
        ece=ece(bins),
        mce=mce(bins),
        rmse=rmse(preds, labels),
        auc=auc_value,
        acc=acc(preds, labels, threshold),
        n=int(np.asarray(preds).size),
        bins=bins,
    )


def reliability_csv(bins: Sequence[ReliabilityBin]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["k", "weight", "mean_pred", "frac_pos"])
    for b in bins:
        writer.writerow([b.index, repr(b.weight), repr(b.mean_pred), repr(b.frac_pos)])
    return buffer.getvalue()
