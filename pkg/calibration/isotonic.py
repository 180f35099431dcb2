"""
Isotonic regression calibration via pool adjacent violators, the equal-frequency
histogram binning baseline, and the binning-model lookup every method shares.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Union

import numpy as np

from .core import CalibrationDataset, TieGroup, TieGroups, group_ties
from .errors import EmptyDatasetError, InvalidInputError, InvalidParameterError

logger = logging.getLogger("ENIR.isotonic")


def _readonly(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class BinningModel:
    """
    A frozen calibration map: ordered bins with one probability each.

    Bin i covers scores in (cut_points[i-1], cut_points[i]]; the first bin
    extends down to -inf and the last up to +inf.
    """
    cut_points: np.ndarray
    probs: np.ndarray
    lam: float
    bin_counts: np.ndarray
    bin_positives: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cut_points", _readonly(self.cut_points, float))
        object.__setattr__(self, "probs", _readonly(self.probs, float))
        object.__setattr__(self, "bin_counts", _readonly(self.bin_counts, np.int64))
        object.__setattr__(self, "bin_positives", _readonly(self.bin_positives, np.int64))
        object.__setattr__(self, "lam", float(self.lam))

        b = self.probs.size
        if b == 0:
            raise InvalidInputError("a binning model needs at least one bin")
        if not (self.cut_points.size == b - 1 == self.bin_counts.size - 1 == self.bin_positives.size - 1):
            raise InvalidInputError("cut_points, probs, bin_counts and bin_positives disagree in length")
        if np.any(np.diff(self.cut_points) <= 0):
            raise InvalidInputError("cut points must be strictly increasing")
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise InvalidInputError("bin probabilities must lie in [0, 1]")
        if np.any(self.bin_counts <= 0):
            raise InvalidInputError("bin counts must be positive")
        if self.lam < 0:
            raise InvalidInputError("lambda must be non-negative")

    @property
    def n_bins(self) -> int:
        return int(self.probs.size)

    @property
    def n(self) -> int:
        return int(self.bin_counts.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "cut_points": self.cut_points.tolist(),
            "probs": self.probs.tolist(),
            "bin_counts": self.bin_counts.tolist(),
            "bin_positives": self.bin_positives.tolist(),
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "BinningModel":
        try:
            return cls(
                cut_points=document["cut_points"],
                probs=document["probs"],
                lam=document["lambda"],
                bin_counts=document["bin_counts"],
                bin_positives=document["bin_positives"],
            )
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed binning model document: {e}") from e


def bin_model_from_starts(groups: TieGroups, starts: np.ndarray, estimates: np.ndarray,
                          lam: float = 0.0) -> BinningModel:
    """
    Build a BinningModel from bin start positions over the group sequence.

    Cut points sit midway between the last training score of one bin and the
    first training score of the next. Estimates are clamped to [0, 1].

    Args:
        groups: Tie groups the bins partition
        starts: Index of the first group of every bin, increasing, starting at 0
        estimates: One estimate per bin
        lam: Path position the model was captured at

    Returns:
        The binning model
    """
    starts = np.asarray(starts, dtype=np.int64)
    cuts = 0.5 * (groups.scores[starts[1:] - 1] + groups.scores[starts[1:]])
    return BinningModel(
        cut_points=cuts,
        probs=np.clip(estimates, 0.0, 1.0),
        lam=lam,
        bin_counts=np.add.reduceat(groups.counts, starts),
        bin_positives=np.add.reduceat(groups.positives, starts),
    )


def fit_pava(groups: Union[TieGroups, Iterable[TieGroup]]) -> BinningModel:
    """
    Isotonic least-squares fit by pooling adjacent violators.

    Blocks are pooled while the left mean is greater than or equal to the right
    one, so every returned bin is maximal. Each bin's estimate is its pooled
    positive frequency.

    Args:
        groups: Tie groups in increasing score order

    Returns:
        The isotonic binning model (lambda = 0)
    """
    groups = TieGroups.coerce(groups)
    if len(groups) == 0:
        raise EmptyDatasetError("cannot fit isotonic regression on no data")

    # Stack of blocks: start index, positives, count
    block_start: List[int] = []
    block_pos: List[int] = []
    block_cnt: List[int] = []
    for i, (pos, cnt) in enumerate(zip(groups.positives.tolist(), groups.counts.tolist())):
        block_start.append(i)
        block_pos.append(pos)
        block_cnt.append(cnt)
        # left mean >= right mean, compared exactly on integers
        while len(block_cnt) > 1 and block_pos[-2] * block_cnt[-1] >= block_pos[-1] * block_cnt[-2]:
            pos_last, cnt_last = block_pos.pop(), block_cnt.pop()
            block_start.pop()
            block_pos[-1] += pos_last
            block_cnt[-1] += cnt_last

    estimates = np.asarray(block_pos, dtype=float) / np.asarray(block_cnt, dtype=float)
    model = bin_model_from_starts(groups, np.asarray(block_start), estimates)
    logger.debug(f"PAVA pooled {len(groups)} groups into {model.n_bins} bins")
    return model


def fit_histogram(dataset: CalibrationDataset, b: int) -> BinningModel:
    """
    Equal-frequency histogram binning.

    Bins hold floor(N/b) or ceil(N/b) consecutive samples; a boundary that
    would split equal scores moves right to the next distinct score, and bins
    emptied that way are dropped.

    Args:
        dataset: Sorted dataset
        b: Requested number of bins, 1 <= b <= N

    Returns:
        Histogram binning model (lambda = 0)
    """
    n = dataset.n
    if not isinstance(b, (int, np.integer)) or b < 1:
        raise InvalidParameterError(f"number of bins must be a positive integer, got {b!r}")
    if b > n:
        raise InvalidParameterError(f"number of bins {b} exceeds the {n} samples")

    sizes = np.full(b, n // b, dtype=np.int64)
    sizes[: n % b] += 1
    boundaries = np.cumsum(sizes)[:-1]

    # First sample index of every distinct score; boundaries snap right onto one
    scores = dataset.scores
    distinct_starts = np.flatnonzero(np.r_[True, scores[1:] != scores[:-1]])
    idx = np.searchsorted(distinct_starts, boundaries, side="left")
    snapped = np.where(idx < distinct_starts.size,
                       distinct_starts[np.minimum(idx, distinct_starts.size - 1)], n)
    starts = np.unique(np.r_[0, snapped[snapped < n]])

    groups = group_ties(dataset)
    group_starts = np.searchsorted(distinct_starts, starts)
    counts = np.add.reduceat(groups.counts, group_starts)
    positives = np.add.reduceat(groups.positives, group_starts)
    model = bin_model_from_starts(groups, group_starts, positives / counts)
    if model.n_bins < b:
        logger.info(f"Histogram binning kept {model.n_bins} of {b} bins because of tied scores")
    return model


def check_scores(scores: np.ndarray) -> None:
    if np.any(~np.isfinite(scores)) or np.any(scores < 0.0) or np.any(scores > 1.0):
        raise InvalidInputError("scores to calibrate must lie in [0, 1]")


def bin_index(model: BinningModel, scores) -> np.ndarray:
    """Bin position of every score; a score equal to a cut point goes left."""
    return np.searchsorted(model.cut_points, np.asarray(scores, dtype=float), side="left")


def predict_many(model: BinningModel, scores) -> np.ndarray:
    """
    Calibrated probabilities for an array of scores.

    Args:
        model: Fitted binning model
        scores: Scores in [0, 1]

    Returns:
        Array of bin probabilities
    """
    scores = np.asarray(scores, dtype=float)
    check_scores(scores)
    return model.probs[bin_index(model, scores)]


def predict(model: BinningModel, score: float) -> float:
    """Calibrated probability of a single score in [0, 1]."""
    return float(predict_many(model, np.asarray([score], dtype=float))[0])
