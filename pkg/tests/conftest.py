"""
Shared fixtures for the calibration test suite.
"""
import os
import sys

import numpy as np
import pytest

# Add the repository root to the Python path for imports
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from calibration.core import CalibrationDataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def write_csv(tmp_path):
    """Write rows (or raw text) to a CSV file under tmp_path and return its path."""
    def _write(name, rows=None, text=None, header=("score", "label")):
        path = tmp_path / name
        if text is None:
            lines = [",".join(header)] if header else []
            lines += [",".join(str(cell) for cell in row) for row in rows]
            text = "\n".join(lines) + "\n"
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def hump_dataset(rng):
    """Scores whose positive rate rises and then falls, so isotonicity fails."""
    scores = rng.random(400)
    rate = 1.0 - 3.0 * np.abs(scores - 0.5)
    labels = (rng.random(400) < np.clip(rate, 0.05, 0.95)).astype(int)
    return CalibrationDataset(scores, labels)
