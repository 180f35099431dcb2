"""
Tests for pool adjacent violators, histogram binning and model lookup.
"""
import itertools

import numpy as np
import pytest

from calibration.core import CalibrationDataset, TieGroup, TieGroups, group_ties
from calibration.errors import EmptyDatasetError, InvalidInputError, InvalidParameterError
from calibration.isotonic import (
    BinningModel,
    bin_index,
    fit_histogram,
    fit_pava,
    predict,
    predict_many,
)


def _groups(labels):
    n = len(labels)
    return TieGroups(np.arange(1, n + 1) / (n + 1), labels, np.ones(n, dtype=int))


def _exhaustive_isotonic(labels):
    """Best monotone step fit by trying every split into consecutive blocks."""
    y = np.asarray(labels, dtype=float)
    n = y.size
    best, best_sse = None, np.inf
    for cuts in itertools.product([False, True], repeat=n - 1):
        starts = [0] + [i + 1 for i, c in enumerate(cuts) if c]
        bounds = starts + [n]
        means = [y[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
        if any(m1 > m2 for m1, m2 in zip(means[:-1], means[1:])):
            continue
        fit = np.concatenate([np.full(b - a, m) for a, b, m in zip(bounds[:-1], bounds[1:], means)])
        sse = float(np.sum((fit - y) ** 2))
        if sse < best_sse - 1e-12:
            best, best_sse = fit, sse
    return best


@pytest.mark.parametrize("n", range(1, 7))
def test_pava_matches_exhaustive_search(n):
    """Every label pattern of up to six distinct scores."""
    for labels in itertools.product([0, 1], repeat=n):
        groups = _groups(labels)
        model = fit_pava(groups)
        fitted = predict_many(model, groups.scores)
        np.testing.assert_allclose(fitted, _exhaustive_isotonic(labels), atol=1e-6)
        assert np.all(np.diff(model.probs) > 0)


def test_pava_bins_are_maximal():
    """Neighbours with equal means are pooled."""
    assert fit_pava(_groups([1, 1])).n_bins == 1
    assert fit_pava(_groups([0, 0, 0])).n_bins == 1
    assert fit_pava(_groups([0, 1])).n_bins == 2


def test_pava_pools_violators():
    model = fit_pava(_groups([1, 0, 1, 0]))
    assert model.n_bins == 1
    assert model.probs.tolist() == [0.5]
    assert model.bin_counts.tolist() == [4]
    assert model.bin_positives.tolist() == [2]
    assert model.lam == 0.0


def test_pava_weights_tie_groups():
    groups = [TieGroup(0.1, 3, 4), TieGroup(0.5, 0, 1), TieGroup(0.9, 2, 2)]
    model = fit_pava(groups)
    assert model.probs.tolist() == pytest.approx([0.6, 1.0])
    assert model.cut_points.tolist() == pytest.approx([0.7])
    assert model.bin_counts.tolist() == [5, 2]


def test_pava_empty():
    with pytest.raises(EmptyDatasetError):
        fit_pava([])


def test_cut_points_sit_between_bins():
    ds = CalibrationDataset([0.1, 0.2, 0.6, 0.8], [0, 0, 1, 1])
    model = fit_pava(group_ties(ds))
    assert model.cut_points.tolist() == pytest.approx([0.4])
    assert predict(model, 0.3) == 0.0
    assert predict(model, 0.5) == 1.0
    assert predict(model, 0.0) == 0.0
    assert predict(model, 1.0) == 1.0


def test_prediction_rejects_scores_outside_unit_interval():
    model = fit_pava(_groups([0, 1]))
    with pytest.raises(InvalidInputError):
        predict(model, 1.5)
    with pytest.raises(InvalidInputError):
        predict_many(model, [0.2, float("nan")])


def test_bin_index_puts_ties_left():
    model = BinningModel(cut_points=[0.3, 0.6], probs=[0.1, 0.5, 0.9], lam=0.0,
                         bin_counts=[1, 1, 1], bin_positives=[0, 0, 1])
    assert bin_index(model, [0.0, 0.3, 0.31, 0.6, 0.61, 1.0]).tolist() == [0, 0, 1, 1, 2, 2]


def test_histogram_equal_frequency_sizes():
    ds = CalibrationDataset(np.linspace(0.05, 0.95, 10), [0, 0, 1, 0, 1, 0, 1, 1, 1, 1])
    model = fit_histogram(ds, 3)
    assert model.bin_counts.tolist() == [4, 3, 3]
    assert model.probs.tolist() == pytest.approx([0.25, 2 / 3, 1.0])


def test_histogram_boundaries_move_past_ties():
    ds = CalibrationDataset([0.1, 0.2, 0.2, 0.2, 0.3, 0.4], [0, 1, 0, 1, 1, 1])
    model = fit_histogram(ds, 2)
    assert model.bin_counts.tolist() == [4, 2]
    assert model.cut_points.tolist() == pytest.approx([0.25])


def test_histogram_drops_bins_emptied_by_ties():
    ds = CalibrationDataset([0.5, 0.5, 0.5], [0, 1, 1])
    model = fit_histogram(ds, 3)
    assert model.n_bins == 1
    assert model.probs.tolist() == pytest.approx([2 / 3])


@pytest.mark.parametrize("b", [0, -1, 5])
def test_histogram_rejects_bad_bin_counts(b):
    ds = CalibrationDataset([0.1, 0.2, 0.3, 0.4], [0, 1, 0, 1])
    with pytest.raises(InvalidParameterError):
        fit_histogram(ds, b)


def test_binning_model_document():
    model = fit_pava(_groups([0, 1, 0, 1, 1]))
    document = model.to_dict()
    assert set(document) == {"lambda", "cut_points", "probs", "bin_counts", "bin_positives"}
    restored = BinningModel.from_dict(document)
    assert restored.to_dict() == document


@pytest.mark.parametrize("kwargs", [
    dict(cut_points=[0.5, 0.4], probs=[0.1, 0.2, 0.3], bin_counts=[1, 1, 1], bin_positives=[0, 0, 0]),
    dict(cut_points=[0.5], probs=[0.1, 1.2], bin_counts=[1, 1], bin_positives=[0, 1]),
    dict(cut_points=[0.5], probs=[0.1], bin_counts=[1], bin_positives=[0]),
    dict(cut_points=[0.5], probs=[0.1, 0.2], bin_counts=[0, 1], bin_positives=[0, 0]),
])
def test_binning_model_validation(kwargs):
    with pytest.raises(InvalidInputError):
        BinningModel(lam=0.0, **kwargs)
