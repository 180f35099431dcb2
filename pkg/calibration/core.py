"""
Data model and ingestion shared by every calibration method.
Holds scored samples, sorted datasets, tie groups, score squashing and CSV loading.
"""
import csv
import math
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import (
    EmptyDatasetError,
    InvalidInputError,
    InvalidLabelError,
    ParseError,
)

logger = logging.getLogger("ENIR.core")


@dataclass(frozen=True)
class ScoredSample:
    """One (uncalibrated score, binary label) training pair."""
    score: float
    label: int


@dataclass(frozen=True)
class TieGroup:
    """All samples sharing one distinct score."""
    score: float
    positives: int
    count: int


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


class CalibrationDataset:
    """
    Samples sorted non-decreasing by score.

    Scores and labels are held as read-only numpy arrays; `samples` gives the
    same data as ScoredSample objects.
    """

    __slots__ = ("scores", "labels")

    def __init__(self, scores, labels):
        scores = np.asarray(scores, dtype=float)
        labels = np.asarray(labels)
        if scores.ndim != 1 or scores.shape != labels.shape:
            raise InvalidInputError("scores and labels must be 1-D arrays of equal length")
        if scores.size == 0:
            raise EmptyDatasetError("dataset holds no samples")
        if not np.all(np.isfinite(scores)):
            raise InvalidInputError("scores must be finite")
        if np.any((scores < 0.0) | (scores > 1.0)):
            raise InvalidInputError("scores must lie in [0, 1]")
        if np.any((labels != 0) & (labels != 1)):
            raise InvalidLabelError("labels must be 0 or 1")

        order = np.argsort(scores, kind="stable")
        object.__setattr__(self, "scores", _frozen(scores[order], float))
        object.__setattr__(self, "labels", _frozen(labels[order], np.int64))

    def __setattr__(self, name, value):
        raise AttributeError("CalibrationDataset is immutable")

    @classmethod
    def from_samples(cls, samples: Iterable[ScoredSample]) -> "CalibrationDataset":
        samples = list(samples)
        return cls([s.score for s in samples], [s.label for s in samples])

    @property
    def n(self) -> int:
        return int(self.scores.size)

    @property
    def positives(self) -> int:
        return int(self.labels.sum())

    @property
    def samples(self) -> Tuple[ScoredSample, ...]:
        return tuple(ScoredSample(float(s), int(z)) for s, z in zip(self.scores, self.labels))

    def subset(self, indices) -> "CalibrationDataset":
        """Dataset made of the samples at the given positions of this one."""
        indices = np.asarray(indices, dtype=np.int64)
        return CalibrationDataset(self.scores[indices], self.labels[indices])

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"CalibrationDataset(n={self.n}, positives={self.positives})"


class TieGroups(Sequence):
    """
    Ordered, immutable sequence of TieGroup backed by numpy arrays.

    Path solving reads the arrays directly so that a million groups never
    have to exist as Python objects.
    """

    __slots__ = ("scores", "positives", "counts")

    def __init__(self, scores, positives, counts):
        self.scores = _frozen(scores, float)
        self.positives = _frozen(positives, np.int64)
        self.counts = _frozen(counts, np.int64)
        if not (self.scores.shape == self.positives.shape == self.counts.shape):
            raise InvalidInputError("tie group arrays differ in length")
        if np.any(self.counts <= 0) or np.any(self.positives < 0) or np.any(self.positives > self.counts):
            raise InvalidInputError("tie groups need 0 <= positives <= count and count >= 1")
        if np.any(np.diff(self.scores) <= 0):
            raise InvalidInputError("tie group scores must be strictly increasing")

    @classmethod
    def coerce(cls, groups: Union["TieGroups", Iterable[TieGroup]]) -> "TieGroups":
        """Accept either a TieGroups instance or any iterable of TieGroup."""
        if isinstance(groups, TieGroups):
            return groups
        groups = list(groups)
        return cls(
            [g.score for g in groups],
            [g.positives for g in groups],
            [g.count for g in groups],
        )

    @property
    def n(self) -> int:
        """Number of training instances across all groups."""
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        return self.positives / self.counts

    def __len__(self) -> int:
        return int(self.scores.size)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return TieGroups(self.scores[index], self.positives[index], self.counts[index])
        return TieGroup(float(self.scores[index]), int(self.positives[index]), int(self.counts[index]))

    def __repr__(self) -> str:
        return f"TieGroups(groups={len(self)}, n={self.n})"


def squash_score(raw: float) -> float:
    """
    Map an unbounded classifier output into [0, 1] with the logistic function.

    Args:
        raw: Finite raw score

    Returns:
        1 / (1 + exp(-raw))
    """
    if not math.isfinite(raw):
        raise InvalidInputError(f"cannot squash non-finite score {raw!r}")
    return float(expit(raw))


def squash_scores(raw) -> np.ndarray:
    """Vectorised squash_score."""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise InvalidInputError("cannot squash non-finite scores")
    return expit(raw)


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def read_csv_rows(path: str, require_labels: bool = True) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Read `score,label` rows in file order.

    A first row whose score column is not numeric is taken as a header. Blank
    lines are skipped.

    Args:
        path: CSV file path
        require_labels: When False, a missing label column is accepted and
            labels are returned as None

    Returns:
        Tuple of (scores, labels) arrays
    """
    scores: List[float] = []
    labels: List[int] = []
    has_labels = True
    first_row = True

    with open(path, 'r', encoding='utf-8', newline='') as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            score = _parse_float(row[0].strip())
            is_first, first_row = first_row, False
            if score is None:
                if is_first:
                    continue  # header
                raise ParseError(f"score {row[0]!r} is not a number", line_no)
            if not math.isfinite(score):
                raise ParseError(f"score {row[0]!r} is not finite", line_no)

            if len(row) < 2 or not row[1].strip():
                if require_labels:
                    raise ParseError("expected two columns `score,label`", line_no)
                has_labels = False
                scores.append(score)
                continue
            if len(row) > 2 and any(cell.strip() for cell in row[2:]):
                raise ParseError(f"expected two columns, found {len(row)}", line_no)

            label = _parse_float(row[1].strip())
            if label is None:
                raise ParseError(f"label {row[1]!r} is not a number", line_no)
            if label not in (0.0, 1.0):
                raise InvalidLabelError(f"label {row[1].strip()!r} is not 0 or 1", line_no)
            scores.append(score)
            labels.append(int(label))

    if not scores:
        raise EmptyDatasetError(f"{path} holds no data rows")

    if not has_labels or len(labels) != len(scores):
        if require_labels:
            raise ParseError("some rows are missing labels")
        return np.asarray(scores, dtype=float), None
    return np.asarray(scores, dtype=float), np.asarray(labels, dtype=np.int64)


def load_csv(path: str, squash: bool = False) -> CalibrationDataset:
    """
    Load a `score,label` CSV into a sorted dataset.

    Args:
        path: CSV file path
        squash: Apply the logistic function to raw scores first

    Returns:
        Dataset stably sorted by score
    """
    scores, labels = read_csv_rows(path)
    if squash:
        scores = squash_scores(scores)
    elif np.any((scores < 0.0) | (scores > 1.0)):
        raise InvalidInputError(f"{path}: scores must lie in [0, 1]; use --squash to map raw scores "
                                f"through the logistic function")
    dataset = CalibrationDataset(scores, labels)
    logger.info(f"Loaded {dataset.n} samples ({dataset.positives} positive) from {path}")
    return dataset


def group_ties(dataset: CalibrationDataset) -> TieGroups:
    """
    Collapse equal scores into tie groups.

    Args:
        dataset: Sorted dataset

    Returns:
        One group per distinct score, in increasing score order
    """
    scores = dataset.scores
    starts = np.flatnonzero(np.r_[True, scores[1:] != scores[:-1]])
    counts = np.diff(np.r_[starts, scores.size])
    positives = np.add.reduceat(dataset.labels, starts)
    return TieGroups(scores[starts], positives, counts)
