"""
Tests for the circular data generator and the logistic scorers.
"""
import numpy as np
import pytest

from calibration.errors import InvalidInputError, InvalidParameterError
from calibration.experiment import simulate_scores
from calibration.metrics import auc
from calibration.synthetic import (
    LinearScorer,
    Point2D,
    _standardized,
    as_arrays,
    gen_circular,
    logistic_gradient,
    logistic_loss,
    train_scorer,
)


@pytest.mark.parametrize("n", [2, 101, 1000])
def test_noise_free_points_follow_the_geometry(n):
    points = gen_circular(n, seed=4)
    positives = [p for p in points if p.label == 1]
    negatives = [p for p in points if p.label == 0]
    assert len(points) == n
    assert len(positives) == n // 2
    assert all(p.radius <= 1.0 for p in positives)
    assert all(1.5 <= p.radius <= 3.0 for p in negatives)


def test_generation_is_deterministic():
    assert gen_circular(300, seed=9, noise=0.1) == gen_circular(300, seed=9, noise=0.1)
    assert gen_circular(300, seed=9) != gen_circular(300, seed=10)


def test_points_are_shuffled():
    labels = [p.label for p in gen_circular(200, seed=1)]
    assert labels != sorted(labels, reverse=True)


def test_noise_flips_labels():
    points = gen_circular(4000, seed=2, noise=0.2)
    inside = np.array([p.radius <= 1.0 for p in points])
    labels = np.array([p.label for p in points])
    flipped = np.mean(labels != inside.astype(int))
    assert 0.17 < flipped < 0.23


@pytest.mark.parametrize("kwargs", [{"n": 1}, {"n": 10, "noise": -0.1}, {"n": 10, "noise": 0.6}])
def test_generator_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        gen_circular(**kwargs)


def test_gradient_matches_finite_differences(rng):
    coords, labels = as_arrays(gen_circular(60, seed=3, noise=0.1))
    features, _, _ = _standardized(coords, quadratic=True)
    y = labels.astype(float)
    params = rng.standard_normal(features.shape[1] + 1)
    h = 1e-6
    numeric = np.array([
        (logistic_loss(params + h * e, features, y) - logistic_loss(params - h * e, features, y)) / (2 * h)
        for e in np.eye(params.size)
    ])
    np.testing.assert_allclose(logistic_gradient(params, features, y), numeric, rtol=1e-5, atol=1e-8)


def test_zero_epochs_score_one_half():
    points = gen_circular(50, seed=5)
    scorer = train_scorer(points, epochs=0)
    assert np.all(scorer.score(points) == 0.5)


def test_loss_never_increases():
    points = gen_circular(400, seed=6, noise=0.05)
    for quadratic in (False, True):
        coords, labels = as_arrays(points)
        features, _, _ = _standardized(coords, quadratic)
        history = []
        for epochs in range(0, 201, 20):
            scorer = train_scorer(points, quadratic=quadratic, epochs=epochs)
            params = np.r_[scorer.bias, scorer.weights]
            history.append(logistic_loss(params, features, labels.astype(float)))
        assert np.all(np.diff(history) <= 1e-12)


def test_separable_line_is_learned():
    xs = np.linspace(-1.0, 1.0, 40)
    points = [Point2D(float(x), 0.0, int(x > 0)) for x in xs]
    scorer = train_scorer(points)
    preds = scorer.score(points) >= 0.5
    labels = np.array([p.label for p in points], dtype=bool)
    assert np.mean(preds == labels) >= 0.95
    assert scorer.feature_scale[1] == 1.0


def test_scorer_accepts_arrays_and_points():
    points = gen_circular(100, seed=8)
    scorer = train_scorer(points, quadratic=True, epochs=50)
    coords, _ = as_arrays(points)
    np.testing.assert_array_equal(scorer.score(points), scorer.score(coords))
    assert set(scorer.to_dict()) == {"quadratic", "bias", "weights", "feature_mean", "feature_scale"}
    with pytest.raises(InvalidInputError):
        scorer.score(np.zeros((3, 3)))


def test_scorer_validation():
    one_class = [Point2D(0.1, 0.2, 1), Point2D(0.3, 0.1, 1)]
    with pytest.raises(InvalidInputError):
        train_scorer(one_class)
    points = gen_circular(20, seed=0)
    with pytest.raises(InvalidParameterError):
        train_scorer(points, epochs=-1)
    with pytest.raises(InvalidParameterError):
        train_scorer(points, learning_rate=0.0)
    with pytest.raises(InvalidInputError):
        LinearScorer(weights=[1.0, 2.0], bias=0.0, quadratic=True,
                     feature_mean=[0.0, 0.0], feature_scale=[1.0, 1.0])


def test_scorer_quality_anchors():
    """A linear scorer is near chance on circular data, a quadratic one separates it."""
    linear = simulate_scores(2000, noise=0.0, seed=0, scorer="linear")
    quadratic = simulate_scores(2000, noise=0.0, seed=0, scorer="quadratic")
    assert auc(linear.test_scores, linear.test_labels) <= 0.65
    assert auc(quadratic.test_scores, quadratic.test_labels) >= 0.99
    assert np.all((linear.test_scores > 0.0) & (linear.test_scores < 1.0))
    assert linear.train_scores.size == linear.test_scores.size == 1000


def test_simulation_validation():
    with pytest.raises(InvalidParameterError):
        simulate_scores(100, noise=0.0, seed=0, scorer="cubic")
    with pytest.raises(InvalidParameterError):
        simulate_scores(100, noise=0.0, seed=0, train_fraction=1.0)
