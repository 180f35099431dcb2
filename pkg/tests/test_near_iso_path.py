"""
Tests for the near-isotonic solution path.
"""
import itertools
import time

import numpy as np
import pytest

from calibration.core import CalibrationDataset, TieGroup, TieGroups, group_ties
from calibration.errors import EmptyDatasetError, InvalidInputError
from calibration.isotonic import fit_pava, predict_many
from calibration.near_iso_path import objective, solve_path


def _groups(labels):
    n = len(labels)
    return TieGroups(np.arange(1, n + 1) / (n + 1), labels, np.ones(n, dtype=int))


def _random_groups(rng, n, ties=False):
    scores = rng.integers(0, max(2, n // 3), n) / n if ties else rng.random(n)
    labels = (rng.random(n) < 0.3 + 0.4 * scores).astype(int)
    return group_ties(CalibrationDataset(scores, labels))


def _is_minimizer(groups, estimates, lam, rng, trials=200):
    base = objective(groups, estimates, lam)
    for _ in range(trials):
        direction = rng.standard_normal(len(groups))
        for step in (1e-4, 1e-2, 1e-1):
            if objective(groups, estimates + step * direction, lam) < base - 1e-9:
                return False
    return True


def test_two_sample_path():
    """A single violating pair meets at half the unit gap."""
    path = solve_path(_groups([1, 0]))
    assert path.lambdas == (0.5,)
    assert path.steps == (1,)
    model = path.models[0]
    assert model.n_bins == 1
    assert model.probs.tolist() == [0.5]
    assert model.lam == 0.5


def test_monotone_input_keeps_the_saturated_fit():
    path = solve_path(_groups([0, 0, 1, 1]))
    assert path.n_breakpoints == 0
    assert path.includes_saturated
    assert len(path) == 1
    assert path.models[0].probs.tolist() == [0.0, 1.0]
    assert path.saturated_model().n_bins == 2
    assert path.saturated_model().bin_counts.tolist() == [2, 2]


def test_path_bins_describe_the_state():
    path = solve_path(_groups([0, 1, 0, 1]))
    bins = path.path_bins(0)
    assert [b.estimate for b in bins] == [0.0, 1.0, 0.0, 1.0]
    assert [b.viol_next for b in bins] == [False, True, False, False]
    assert [b.slope for b in bins] == [0.0, -1.0, 1.0, 0.0]
    assert path.lambda_at(0) == 0.0
    with pytest.raises(InvalidInputError):
        path.bin_starts(path.n_breakpoints + 1)


def test_path_endpoint_matches_pava():
    """1000 random datasets up to 500 samples, with and without tied scores."""
    rng = np.random.default_rng(7)
    for trial in range(1000):
        n = int(rng.integers(1, 501))
        groups = _random_groups(rng, n, ties=bool(trial % 2))
        path = solve_path(groups)
        expected = predict_many(fit_pava(groups), groups.scores)
        final = np.clip(path.group_estimates(path.n_breakpoints), 0.0, 1.0)
        np.testing.assert_allclose(final, expected, atol=1e-9)
        pava, model = fit_pava(groups), path.final_model()
        assert model.n_bins == pava.n_bins
        np.testing.assert_allclose(model.probs, pava.probs, atol=1e-9)
        assert model.bin_counts.tolist() == pava.bin_counts.tolist()


def test_equal_neighbours_share_a_bin():
    """Pooling the middle pair leaves two bins at 1.0 that never converge."""
    groups = _groups([0, 1, 0, 1, 1])
    path = solve_path(groups)
    final = path.final_model()
    assert final.probs.tolist() == [0.0, 0.5, 1.0]
    assert final.probs.tolist() == fit_pava(groups).probs.tolist()
    assert final.bin_counts.tolist() == [1, 2, 2]
    assert final.cut_points.tolist() == pytest.approx(fit_pava(groups).cut_points.tolist())


def test_captured_models_have_maximal_bins(rng):
    for _ in range(200):
        groups = _random_groups(rng, int(rng.integers(2, 80)), ties=True)
        for model in solve_path(groups).models:
            assert np.all(np.abs(np.diff(model.probs)) > 1e-9)
            assert model.n == groups.counts.sum()


def test_breakpoints_minimize_the_objective():
    """Every captured model of every 8-label pattern is optimal at its lambda."""
    rng = np.random.default_rng(11)
    for labels in itertools.product([0, 1], repeat=8):
        groups = _groups(labels)
        path = solve_path(groups)
        for step in path.steps:
            lam = path.lambda_at(step)
            estimates = path.group_estimates(step)
            assert _is_minimizer(groups, estimates, lam, rng, trials=30), (labels, step)


def test_midway_solutions_minimize_the_objective(rng):
    """Between breakpoints the estimates move linearly and stay optimal."""
    for _ in range(20):
        groups = _random_groups(rng, 40)
        path = solve_path(groups)
        for step in range(path.n_breakpoints):
            lo, hi = path.lambda_at(step), path.lambda_at(step + 1)
            lam = 0.5 * (lo + hi)
            bins = path.path_bins(step)
            estimates = np.concatenate([
                np.full(b.last - b.first + 1, b.estimate + b.slope * (lam - lo)) for b in bins
            ])
            assert _is_minimizer(groups, estimates, lam, rng, trials=10)


def test_bins_never_split(rng):
    for _ in range(200):
        groups = _random_groups(rng, int(rng.integers(2, 120)), ties=True)
        path = solve_path(groups)
        assert np.all(np.diff(path.lambdas) > 0)
        for step in range(1, path.n_breakpoints + 1):
            before = set(path.bin_starts(step - 1).tolist())
            after = set(path.bin_starts(step).tolist())
            assert len(after) < len(before)
            assert after <= before


def test_merging_bins_meet_at_the_breakpoint(rng):
    """Bins fused at a breakpoint share one estimate there."""
    for _ in range(50):
        groups = _random_groups(rng, 60)
        path = solve_path(groups)
        for step in range(1, path.n_breakpoints + 1):
            lam_prev, lam = path.lambda_at(step - 1), path.lambda_at(step)
            previous = path.path_bins(step - 1)
            for merged in path.path_bins(step):
                members = [b for b in previous if merged.first <= b.first and b.last <= merged.last]
                values = [b.estimate + b.slope * (lam - lam_prev) for b in members]
                assert max(values) - min(values) < 1e-7
                assert merged.estimate == pytest.approx(values[0], abs=1e-7)


def test_tie_groups_are_weighted():
    groups = [TieGroup(0.2, 2, 2), TieGroup(0.4, 0, 3), TieGroup(0.6, 1, 1)]
    path = solve_path(groups)
    final = path.final_model()
    expected = fit_pava(groups)
    assert final.probs.tolist() == pytest.approx(expected.probs.tolist())
    assert all(m.n == 6 for m in path.models)


def test_solve_path_requires_data():
    with pytest.raises(EmptyDatasetError):
        solve_path([])


def test_objective_value_and_validation():
    groups = _groups([1, 0])
    assert objective(groups, np.array([1.0, 0.0]), 0.3) == pytest.approx(0.3)
    assert objective(groups, np.array([0.5, 0.5]), 0.3) == pytest.approx(0.25)
    with pytest.raises(InvalidInputError):
        objective(groups, np.array([0.5]), 0.3)
    with pytest.raises(InvalidInputError):
        objective(groups, np.array([0.5, 0.5]), -1.0)


@pytest.mark.slow
def test_solve_time_grows_like_n_log_n():
    rng = np.random.default_rng(3)
    sizes = [10_000, 20_000, 40_000, 80_000, 160_000]
    timings = []
    for n in sizes:
        groups = _random_groups(rng, n)
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            solve_path(groups)
            best = min(best, time.perf_counter() - start)
        timings.append(best)
    ratios = np.array(timings[1:]) / np.array(timings[:-1])
    assert np.all(ratios <= 2.6), ratios.tolist()


@pytest.mark.slow
def test_million_sample_solve():
    rng = np.random.default_rng(5)
    groups = _random_groups(rng, 1_000_000)
    start = time.perf_counter()
    path = solve_path(groups)
    assert time.perf_counter() - start < 60.0
    assert path.n_breakpoints > 0
