"""
Simulated-data experiment.

Circular data is split into a training half, used to train the base scorer and
to fit every calibrator, and a test half. Calibrators are compared on the test
half directly and by stratified cross-validation over the test scores, where
the folds are ranked and compared with the Friedman and Holm procedure.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .base_calibrator import DEFAULT_SETTINGS
from .benchmark import METRIC_NAMES, RankMatrix, cross_validate, friedman_holm, summarize
from .calibrators import build_calibrator
from .core import CalibrationDataset
from .errors import InvalidParameterError
from .metrics import evaluate
from .synthetic import LinearScorer, as_arrays, gen_circular, train_scorer

logger = logging.getLogger("ENIR.experiment")

EXPERIMENT_METHODS = ("none", "hist", "isoreg", "enir")
SCORERS = ("linear", "quadratic")
HIGHER_IS_BETTER = {"auc": True, "acc": True, "rmse": False, "ece": False, "mce": False}


@dataclass(frozen=True)
class SimulatedSplit:
    """Scores of the trained scorer on both halves, in generation order."""
    scorer: LinearScorer
    train_scores: np.ndarray
    train_labels: np.ndarray
    test_scores: np.ndarray
    test_labels: np.ndarray

    @property
    def train(self) -> CalibrationDataset:
        return CalibrationDataset(self.train_scores, self.train_labels)

    @property
    def test(self) -> CalibrationDataset:
        return CalibrationDataset(self.test_scores, self.test_labels)


def simulate_scores(n: int, noise: float, seed: int, scorer: str = "linear",
                    epochs: int = 500, learning_rate: float = 0.5,
                    train_fraction: float = 0.5) -> SimulatedSplit:
    """
    Generate circular data, train a scorer on the first part and score both parts.

    Args:
        n: Total number of points
        noise: Label flip probability
        seed: Generator seed
        scorer: linear or quadratic
        epochs: Gradient descent epochs
        learning_rate: Gradient descent step
        train_fraction: Share of points used for training

    Returns:
        SimulatedSplit
    """
    if scorer not in SCORERS:
        raise InvalidParameterError(f"unknown scorer {scorer!r}; choose from {', '.join(SCORERS)}")
    if not 0.0 < train_fraction < 1.0:
        raise InvalidParameterError(f"train fraction must lie in (0, 1), got {train_fraction}")

    points = gen_circular(n, seed=seed, noise=noise)
    n_train = int(round(n * train_fraction))
    if not 0 < n_train < n:
        raise InvalidParameterError(f"cannot split {n} points with train fraction {train_fraction}")
    train_points, test_points = points[:n_train], points[n_train:]

    model = train_scorer(train_points, quadratic=(scorer == "quadratic"),
                         epochs=epochs, learning_rate=learning_rate)
    train_coords, train_labels = as_arrays(train_points)
    test_coords, test_labels = as_arrays(test_points)
    return SimulatedSplit(
        scorer=model,
        train_scores=model.score(train_coords),
        train_labels=train_labels,
        test_scores=model.score(test_coords),
        test_labels=test_labels,
    )


def holdout_reports(split: SimulatedSplit, methods: Sequence[str] = EXPERIMENT_METHODS,
                    k: int = 10, bins: int = 10) -> Dict[str, Dict[str, Any]]:
    """Fit every method on the training half and evaluate on the test half."""
    train = split.train
    reports = {}
    for method in methods:
        options = {"bins": bins} if method == "hist" else {}
        calibrator = build_calibrator(method, **options).fit(train)
        report = evaluate(calibrator.predict(split.test_scores), split.test_labels, k=k)
        reports[method] = report.to_dict(include_bins=False)
    return reports


def compare_folds(fold_metrics: Dict[str, List[Dict[str, Any]]], control: str = "enir",
                  alpha: float = 0.05) -> Dict[str, Any]:
    """
    Friedman + Holm over folds, one test per metric, with the given control.

    Args:
        fold_metrics: Per method, the per-fold metric dictionaries in fold order
        control: Control method name
        alpha: Significance level

    Returns:
        Per metric, the FriedmanResult dictionary (None when a metric is undefined on a fold)
    """
    methods = list(fold_metrics)
    if control not in methods:
        raise InvalidParameterError(f"control {control!r} is not among {methods}")
    tests: Dict[str, Any] = {}
    for metric in METRIC_NAMES:
        columns = [[fold[metric] for fold in fold_metrics[m]] for m in methods]
        if any(v is None for column in columns for v in column):
            tests[metric] = None
            continue
        ranks = RankMatrix.from_scores(np.array(columns).T, higher_is_better=HIGHER_IS_BETTER[metric],
                                       methods=methods)
        tests[metric] = friedman_holm(ranks, alpha=alpha, control=methods.index(control)).to_dict()
    return tests


def run_experiment(settings: Optional[Dict[str, Any]] = None, scorers: Sequence[str] = SCORERS,
                   methods: Sequence[str] = EXPERIMENT_METHODS, n_jobs: int = 1) -> Dict[str, Any]:
    """
    Run the full simulated-data experiment.

    Args:
        settings: Settings dictionary as returned by load_settings
        scorers: Base scorers to run
        methods: Calibration methods to compare
        n_jobs: Threads for cross-validation

    Returns:
        JSON-ready results per scorer: holdout metrics, cross-validation
        summaries and significance tests
    """
    settings = settings or DEFAULT_SETTINGS
    sim = settings["simulation"]
    ev = settings["evaluation"]
    bins = settings["calibration"]["histogram_bins"]

    results: Dict[str, Any] = {
        "settings": {"simulation": dict(sim), "evaluation": dict(ev)},
        "scorers": {},
    }
    for scorer in scorers:
        logger.info(f"Running the {scorer} scorer experiment")
        split = simulate_scores(sim["n"], sim["noise"], sim["seed"], scorer, sim["epochs"],
                                sim["learning_rate"], sim["train_fraction"])

        cv_summary: Dict[str, Any] = {}
        fold_metrics: Dict[str, List[Dict[str, Any]]] = {}
        test = split.test
        for method in methods:
            options = {"bins": bins} if method == "hist" else {}
            folds = cross_validate(test, folds=ev["folds"], repeats=ev["repeats"], method=method,
                                   seed=ev["seed"], n_jobs=n_jobs, k=ev["reliability_bins"],
                                   threshold=ev["threshold"], **options)
            cv_summary[method] = summarize(folds)
            fold_metrics[method] = [f.report.to_dict(include_bins=False) for f in folds]

        control = "enir" if "enir" in methods else methods[0]
        results["scorers"][scorer] = {
            "holdout": holdout_reports(split, methods, k=ev["reliability_bins"], bins=bins),
            "cv": cv_summary,
            "significance": compare_folds(fold_metrics, control=control, alpha=ev["alpha"])
            if len(methods) > 1 else {},
        }
    return results
