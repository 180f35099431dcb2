"""
Ensemble of near-isotonic regression models.

Every model captured on the near-isotonic path is scored with BIC and the
calibrated prediction is the score-weighted average of the member predictions.
"""
import math
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .core import CalibrationDataset, TieGroup, TieGroups, group_ties
from .errors import InvalidInputError
from .isotonic import BinningModel, check_scores, bin_index
from .near_iso_path import MERGE_TOLERANCE, solve_path

logger = logging.getLogger("ENIR.enir")


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """BIC-weighted set of binning models."""
    models: tuple
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        weights.setflags(write=False)
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "weights", weights)
        if not self.models:
            raise InvalidInputError("an ensemble needs at least one model")
        if weights.shape != (len(self.models),):
            raise InvalidInputError("one weight per model is required")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidInputError("weights must be non-negative and sum to 1")

    @property
    def t(self) -> int:
        return len(self.models)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": "enir",
            "weights": self.weights.tolist(),
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "PathEnsemble":
        try:
            return cls(
                models=tuple(BinningModel.from_dict(m) for m in document["models"]),
                weights=document["weights"],
            )
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed ensemble document: {e}") from e


def bic_score(model: BinningModel, groups: Union[TieGroups, Iterable[TieGroup]]) -> float:
    """
    Log-domain BIC score of a binning model on its training groups.

    log L - (k / 2) log N with k bins and a Bernoulli likelihood per bin; bin
    probabilities are clamped to [1/(2N), 1 - 1/(2N)] so pure bins stay finite.

    Args:
        model: Model fitted on the groups
        groups: Training tie groups

    Returns:
        log Score(model)
    """
    groups = TieGroups.coerce(groups)
    n = groups.n
    if model.n != n or int(model.bin_positives.sum()) != int(groups.positives.sum()):
        raise InvalidInputError(
            f"model covers {model.n} instances but the groups hold {n}"
        )
    eps = 1.0 / (2.0 * n)
    p = np.clip(model.probs, eps, 1.0 - eps)
    pos = model.bin_positives
    neg = model.bin_counts - model.bin_positives
    log_likelihood = float(np.sum(pos * np.log(p) + neg * np.log1p(-p)))
    return log_likelihood - 0.5 * model.n_bins * math.log(n)


def normalize_log_scores(log_scores: Sequence[float]) -> np.ndarray:
    """Softmax of log scores (max-shifted, so large T does not underflow)."""
    log_scores = np.asarray(log_scores, dtype=float)
    weights = np.exp(log_scores - logsumexp(log_scores))
    return weights / weights.sum()


def fit_enir(dataset: CalibrationDataset, tolerance: float = MERGE_TOLERANCE) -> PathEnsemble:
    """
    Fit ENIR: solve the path, score each captured model, weight by BIC.

    Args:
        dataset: Sorted training dataset
        tolerance: Breakpoint merge tolerance of the path solver

    Returns:
        The fitted ensemble
    """
    groups = group_ties(dataset)
    path = solve_path(groups, tolerance)
    models = path.models
    log_scores = [bic_score(m, groups) for m in models]
    weights = normalize_log_scores(log_scores)
    best = int(np.argmax(weights))
    logger.info(f"ENIR ensemble of {len(models)} models on {dataset.n} samples; "
                f"heaviest model has {models[best].n_bins} bins (weight {weights[best]:.3f})")
    return PathEnsemble(models=models, weights=weights)


def member_predictions(ensemble: PathEnsemble, scores) -> np.ndarray:
    """Predictions of every member: array of shape (T, len(scores))."""
    scores = np.asarray(scores, dtype=float)
    check_scores(scores)
    return np.stack([m.probs[bin_index(m, scores)] for m in ensemble.models])


def predict_enir_many(ensemble: PathEnsemble, scores) -> np.ndarray:
    """
    Weighted-average calibrated probabilities for an array of scores.

    Args:
        ensemble: Fitted ensemble
        scores: Scores in [0, 1]

    Returns:
        Calibrated probabilities
    """
    members = member_predictions(ensemble, scores)
    averaged = ensemble.weights @ members
    # Keep the convex combination inside the member range despite rounding
    return np.clip(averaged, members.min(axis=0), members.max(axis=0))


def predict_enir(ensemble: PathEnsemble, score: float) -> float:
    """Calibrated probability of a single score in [0, 1]."""
    return float(predict_enir_many(ensemble, np.asarray([score], dtype=float))[0])
