"""
Circular simulated data and small logistic scorers.

Positives sit inside the unit disk and negatives in a surrounding annulus, so a
linear scorer is close to random while a scorer on quadratic features separates
the classes; the linear scores violate the monotone relation that isotonic
calibration assumes.
"""
import math
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, InvalidParameterError

logger = logging.getLogger("ENIR.synthetic")

DISK_RADIUS = 1.0
ANNULUS_INNER = 1.5
ANNULUS_OUTER = 3.0


@dataclass(frozen=True)
class Point2D:
    x1: float
    x2: float
    label: int

    @property
    def radius(self) -> float:
        return math.hypot(self.x1, self.x2)


PointsLike = Union[Sequence[Point2D], np.ndarray]


def as_arrays(points: Iterable[Point2D]) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates as an (n, 2) array and labels as an int array."""
    points = list(points)
    coords = np.array([[p.x1, p.x2] for p in points], dtype=float).reshape(-1, 2)
    labels = np.array([p.label for p in points], dtype=np.int64)
    return coords, labels


def _coords(points: PointsLike) -> np.ndarray:
    if isinstance(points, np.ndarray):
        coords = np.asarray(points, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidInputError("coordinates must have shape (n, 2)")
        return coords
    return as_arrays(points)[0]


def _uniform_ring(rng: np.random.Generator, size: int, inner: float, outer: float) -> np.ndarray:
    # Radius by inverse CDF so points are uniform over the area
    radius = np.sqrt(rng.uniform(inner ** 2, outer ** 2, size))
    angle = rng.uniform(0.0, 2.0 * math.pi, size)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def gen_circular(n: int, seed: int = 0, noise: float = 0.0) -> Tuple[Point2D, ...]:
    """
    Generate the disk-and-annulus dataset.

    n // 2 positives are uniform in the unit disk and the rest uniform in the
    annulus with radii 1.5 and 3; each label then flips independently with
    probability noise. Points come back shuffled.

    Args:
        n: Number of points, at least 2
        seed: Seed of the generator
        noise: Label flip probability in [0, 0.5]

    Returns:
        Tuple of Point2D
    """
    if n < 2:
        raise InvalidParameterError(f"at least two points are required, got {n}")
    if not 0.0 <= noise <= 0.5:
        raise InvalidParameterError(f"noise must lie in [0, 0.5], got {noise}")

    rng = np.random.default_rng(seed)
    n_pos = n // 2
    coords = np.vstack([
        _uniform_ring(rng, n_pos, 0.0, DISK_RADIUS),
        _uniform_ring(rng, n - n_pos, ANNULUS_INNER, ANNULUS_OUTER),
    ])
    labels = np.r_[np.ones(n_pos, dtype=np.int64), np.zeros(n - n_pos, dtype=np.int64)]
    flips = rng.random(n) < noise
    labels = np.where(flips, 1 - labels, labels)

    order = rng.permutation(n)
    logger.debug(f"Generated {n} circular points with {int(flips.sum())} label flips (seed {seed})")
    return tuple(Point2D(float(coords[i, 0]), float(coords[i, 1]), int(labels[i])) for i in order)


def feature_map(coords: np.ndarray, quadratic: bool) -> np.ndarray:
    """(x1, x2), or (x1, x2, x1^2, x2^2, x1*x2) when quadratic."""
    if not quadratic:
        return coords
    x1, x2 = coords[:, 0], coords[:, 1]
    return np.column_stack([x1, x2, x1 ** 2, x2 ** 2, x1 * x2])


def _standardized(coords: np.ndarray, quadratic: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    raw = feature_map(coords, quadratic)
    mean = raw.mean(axis=0)
    scale = raw.std(axis=0)
    scale[scale == 0] = 1.0
    return (raw - mean) / scale, mean, scale


def logistic_loss(params: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
    """
    Mean logistic loss of params = (bias, weights...) on a design matrix.

    Args:
        params: Bias followed by one weight per feature column
        features: (n, d) design matrix
        labels: Binary labels

    Returns:
        Mean negative log-likelihood
    """
    logits = params[0] + features @ params[1:]
    return float(np.mean(np.logaddexp(0.0, logits) - labels * logits))


def logistic_gradient(params: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of logistic_loss with respect to (bias, weights...)."""
    residual = expit(params[0] + features @ params[1:]) - labels
    return np.r_[residual.mean(), features.T @ residual / labels.size]


@dataclass(frozen=True, eq=False)
class LinearScorer:
    """
    Logistic scorer on standardized (optionally quadratic) features.

    score = sigmoid(bias + weights . (phi(x) - feature_mean) / feature_scale)
    """
    weights: np.ndarray
    bias: float
    quadratic: bool
    feature_mean: np.ndarray
    feature_scale: np.ndarray

    def __post_init__(self):
        for name in ("weights", "feature_mean", "feature_scale"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        d = 5 if self.quadratic else 2
        if not (self.weights.shape == self.feature_mean.shape == self.feature_scale.shape == (d,)):
            raise InvalidInputError(f"a {'quadratic' if self.quadratic else 'linear'} scorer needs {d} weights")

    def design(self, points: PointsLike) -> np.ndarray:
        return (feature_map(_coords(points), self.quadratic) - self.feature_mean) / self.feature_scale

    def score(self, points: PointsLike) -> np.ndarray:
        """Scores in (0, 1) for a sequence of points or an (n, 2) array."""
        return expit(self.bias + self.design(points) @ self.weights)

    def to_dict(self):
        return {
            "quadratic": self.quadratic,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "feature_mean": self.feature_mean.tolist(),
            "feature_scale": self.feature_scale.tolist(),
        }


def train_scorer(points: Sequence[Point2D], quadratic: bool = False, epochs: int = 500,
                 learning_rate: float = 0.5) -> LinearScorer:
    """
    Fit a logistic scorer by full-batch gradient descent.

    Features are standardized with the training mean and standard deviation
    and parameters start at zero, so training is deterministic.

    Args:
        points: Labelled training points with both classes present
        quadratic: Use the quadratic feature map
        epochs: Gradient steps, zero returns the all-zero scorer
        learning_rate: Fixed step size

    Returns:
        Trained LinearScorer
    """
    if epochs < 0:
        raise InvalidParameterError(f"epochs must be non-negative, got {epochs}")
    if learning_rate <= 0:
        raise InvalidParameterError(f"learning rate must be positive, got {learning_rate}")
    coords, labels = as_arrays(points)
    if labels.size == 0 or labels.min() == labels.max():
        raise InvalidInputError("training points must contain both classes")

    features, mean, scale = _standardized(coords, quadratic)
    y = labels.astype(float)

    params = np.zeros(features.shape[1] + 1)
    for _ in range(epochs):
        params -= learning_rate * logistic_gradient(params, features, y)

    kind = "quadratic" if quadratic else "linear"
    logger.info(f"Trained {kind} scorer on {labels.size} points; "
                f"final loss {logistic_loss(params, features, y):.4f}")
    return LinearScorer(weights=params[1:], bias=float(params[0]), quadratic=quadratic,
                        feature_mean=mean, feature_scale=scale)

