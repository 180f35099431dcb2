"""
Tests for BIC scoring and the ENIR ensemble.
"""
import json
import math

import numpy as np
import pytest

from calibration.core import CalibrationDataset, TieGroups, group_ties
from calibration.enir import (
    PathEnsemble,
    bic_score,
    fit_enir,
    member_predictions,
    normalize_log_scores,
    predict_enir,
    predict_enir_many,
)
from calibration.errors import InvalidInputError
from calibration.isotonic import fit_pava, predict_many


def _groups(labels):
    n = len(labels)
    return TieGroups(np.arange(1, n + 1) / (n + 1), labels, np.ones(n, dtype=int))


def test_monotone_pair_gives_a_single_model():
    ensemble = fit_enir(CalibrationDataset([0.2, 0.8], [0, 1]))
    assert ensemble.t == 1
    assert ensemble.weights.tolist() == [1.0]
    assert predict_enir(ensemble, 0.1) == 0.0
    assert predict_enir(ensemble, 0.9) == 1.0


def test_bic_score_of_a_single_bin():
    groups = _groups([1, 0, 1, 0])
    model = fit_pava(groups)
    assert bic_score(model, groups) == pytest.approx(4 * math.log(0.5) - 0.5 * math.log(4))


def test_bic_score_clamps_pure_bins():
    groups = _groups([1, 1])
    model = fit_pava(groups)
    assert model.probs.tolist() == [1.0]
    assert bic_score(model, groups) == pytest.approx(2 * math.log(0.75) - 0.5 * math.log(2))


def test_isotonic_member_is_scored_like_pava():
    dataset = CalibrationDataset([0.1, 0.3, 0.5, 0.7, 0.9], [0, 1, 0, 1, 1])
    groups = group_ties(dataset)
    ensemble = fit_enir(dataset)
    last, pava = ensemble.models[-1], fit_pava(groups)
    assert last.n_bins == pava.n_bins == 3
    assert bic_score(last, groups) == pytest.approx(bic_score(pava, groups))


def test_bic_score_rejects_foreign_groups():
    model = fit_pava(_groups([1, 0, 1, 0]))
    with pytest.raises(InvalidInputError):
        bic_score(model, _groups([1, 0]))


def test_normalize_log_scores():
    assert normalize_log_scores([0.0, math.log(3.0)]).tolist() == pytest.approx([0.25, 0.75])
    assert normalize_log_scores([-1e4, -1e4]).tolist() == pytest.approx([0.5, 0.5])
    weights = normalize_log_scores([1e3, 0.0])
    assert np.isfinite(weights).all() and weights[0] == pytest.approx(1.0)


def test_ensemble_contracts(rng):
    """Weights sum to one, predictions stay inside the member range, documents are stable."""
    for _ in range(100):
        n = int(rng.integers(2, 200))
        scores = np.round(rng.random(n), 2)
        labels = (rng.random(n) < 0.5).astype(int)
        ensemble = fit_enir(CalibrationDataset(scores, labels))

        assert abs(ensemble.weights.sum() - 1.0) <= 1e-12
        probe = np.linspace(0.0, 1.0, 57)
        members = member_predictions(ensemble, probe)
        preds = predict_enir_many(ensemble, probe)
        assert np.all(preds >= members.min(axis=0))
        assert np.all(preds <= members.max(axis=0))

        document = json.dumps(ensemble.to_dict(), sort_keys=True)
        restored = PathEnsemble.from_dict(json.loads(document))
        assert json.dumps(restored.to_dict(), sort_keys=True) == document
        assert np.array_equal(predict_enir_many(restored, probe), preds)


def test_models_are_ordered_by_lambda(hump_dataset):
    ensemble = fit_enir(hump_dataset)
    lambdas = [m.lam for m in ensemble.models]
    assert lambdas == sorted(lambdas)
    assert all(lam > 0 for lam in lambdas)
    # The heaviest-penalty model is the isotonic fit
    pava = fit_pava(group_ties(hump_dataset))
    np.testing.assert_allclose(predict_many(ensemble.models[-1], hump_dataset.scores),
                               predict_many(pava, hump_dataset.scores), atol=1e-9)


def test_ensemble_captures_non_monotone_trend(hump_dataset):
    """The middle of the score range ends up above both tails."""
    ensemble = fit_enir(hump_dataset)
    low, mid, high = predict_enir_many(ensemble, [0.05, 0.5, 0.95])
    assert mid > low + 0.3
    assert mid > high + 0.3


def test_prediction_validates_scores():
    ensemble = fit_enir(CalibrationDataset([0.2, 0.8, 0.5], [0, 1, 0]))
    with pytest.raises(InvalidInputError):
        predict_enir(ensemble, -0.1)


@pytest.mark.parametrize("weights", [[0.5], [0.7, 0.7], [-0.5, 1.5]])
def test_ensemble_validation(weights):
    model = fit_pava(_groups([0, 1]))
    with pytest.raises(InvalidInputError):
        PathEnsemble(models=(model, model), weights=weights)


def test_malformed_ensemble_document():
    with pytest.raises(InvalidInputError):
        PathEnsemble.from_dict({"weights": [1.0]})
