"""
Calibrator classes for every method the toolkit offers.
Each wraps one fitting routine behind the BaseCalibrator interface so the CLI,
cross-validation and the experiment driver treat all methods alike.
"""
from typing import Any, Dict, Optional, Type

import numpy as np

from .base_calibrator import BaseCalibrator
from .core import CalibrationDataset, group_ties
from .enir import PathEnsemble, fit_enir, predict_enir_many
from .errors import InvalidParameterError
from .isotonic import BinningModel, check_scores, fit_histogram, fit_pava, predict_many


class EnirCalibrator(BaseCalibrator):
    """
    EnirCalibrator fits the BIC-weighted ensemble of near-isotonic models.
    """

    method = "enir"

    def __init__(self, config_path: Optional[str] = None, tolerance: Optional[float] = None):
        super().__init__("EnirCalibrator", config_path)
        self.tolerance = float(tolerance if tolerance is not None
                               else self.config["calibration"]["merge_tolerance"])
        self.ensemble: Optional[PathEnsemble] = None

    def fit(self, dataset: CalibrationDataset) -> "EnirCalibrator":
        self.ensemble = fit_enir(dataset, self.tolerance)
        self.fitted = True
        return self

    def predict(self, scores) -> np.ndarray:
        self._require_fitted()
        return predict_enir_many(self.ensemble, scores)

    def to_payload(self) -> Dict[str, Any]:
        self._require_fitted()
        return self.ensemble.to_dict()

    def load_payload(self, payload: Dict[str, Any]) -> "EnirCalibrator":
        self.ensemble = PathEnsemble.from_dict(payload)
        self.fitted = True
        return self

    def summary(self) -> Dict[str, Any]:
        self._require_fitted()
        return {
            "method": self.method,
            "models": self.ensemble.t,
            "bins": [m.n_bins for m in self.ensemble.models],
            "max_weight": float(self.ensemble.weights.max()),
        }


class IsotonicCalibrator(BaseCalibrator):
    """
    IsotonicCalibrator fits a monotone step function by pooling adjacent violators.
    """

    method = "isoreg"

    def __init__(self, config_path: Optional[str] = None):
        super().__init__("IsotonicCalibrator", config_path)
        self.model: Optional[BinningModel] = None

    def fit(self, dataset: CalibrationDataset) -> "IsotonicCalibrator":
        self.model = fit_pava(group_ties(dataset))
        self.fitted = True
        return self

    def predict(self, scores) -> np.ndarray:
        self._require_fitted()
        return predict_many(self.model, scores)

    def to_payload(self) -> Dict[str, Any]:
        self._require_fitted()
        return self.model.to_dict()

    def load_payload(self, payload: Dict[str, Any]) -> "IsotonicCalibrator":
        self.model = BinningModel.from_dict(payload)
        self.fitted = True
        return self

    def summary(self) -> Dict[str, Any]:
        self._require_fitted()
        return {"method": self.method, "models": 1, "bins": [self.model.n_bins]}


class HistogramCalibrator(IsotonicCalibrator):
    """
    HistogramCalibrator bins scores into equal-frequency bins.
    """

    method = "hist"

    def __init__(self, config_path: Optional[str] = None, bins: Optional[int] = None):
        BaseCalibrator.__init__(self, "HistogramCalibrator", config_path)
        self.bins = int(bins if bins is not None else self.config["calibration"]["histogram_bins"])
        self.model = None

    def fit(self, dataset: CalibrationDataset) -> "HistogramCalibrator":
        self.model = fit_histogram(dataset, self.bins)
        self.fitted = True
        return self


class UncalibratedScorer(BaseCalibrator):
    """
    The base classifier itself: scores are reported as probabilities unchanged.
    """

    method = "none"

    def __init__(self, config_path: Optional[str] = None):
        super().__init__("UncalibratedScorer", config_path)

    def fit(self, dataset: CalibrationDataset) -> "UncalibratedScorer":
        self.fitted = True
        return self

    def predict(self, scores) -> np.ndarray:
        scores = np.array(scores, dtype=float)
        check_scores(scores)
        return scores

    def to_payload(self) -> Dict[str, Any]:
        return {}

    def load_payload(self, payload: Dict[str, Any]) -> "UncalibratedScorer":
        self.fitted = True
        return self


CALIBRATORS: Dict[str, Type[BaseCalibrator]] = {
    "enir": EnirCalibrator,
    "isoreg": IsotonicCalibrator,
    "hist": HistogramCalibrator,
    "none": UncalibratedScorer,
}

# Methods that can be written to a model file
PERSISTABLE_METHODS = ("enir", "isoreg", "hist")


def build_calibrator(method: str, **options) -> BaseCalibrator:
    """
    Create an unfitted calibrator by method name.

    Args:
        method: One of enir, isoreg, hist, none
        **options: Constructor options (config_path, bins, tolerance)

    Returns:
        Calibrator instance
    """
    try:
        cls = CALIBRATORS[method]
    except KeyError:
        raise InvalidParameterError(
            f"unknown calibration method {method!r}; choose from {', '.join(CALIBRATORS)}"
        ) from None
    try:
        return cls(**options)
    except TypeError as e:
        raise InvalidParameterError(f"invalid options for {method}: {e}") from e
