"""
Base Calibrator class for all ENIR toolkit calibration methods.
This serves as the foundation for every calibrator and owns the shared
configuration and logging setup.
"""
import os
import copy
import logging
from datetime import datetime
from typing import Dict, Any, Optional

import numpy as np
import yaml
from dotenv import load_dotenv

from .core import CalibrationDataset
from .errors import InvalidInputError

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG_PATH = os.path.join(PROJECT_ROOT, "config", "config.yaml")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

DEFAULT_SETTINGS: Dict[str, Any] = {
    "logging": {"level": "INFO", "format": LOG_FORMAT, "logs_dir": "logs"},
    "calibration": {"histogram_bins": 10, "merge_tolerance": 1e-12},
    "evaluation": {
        "reliability_bins": 10,
        "folds": 10,
        "repeats": 1,
        "seed": 0,
        "alpha": 0.05,
        "threshold": 0.5,
    },
    "simulation": {
        "n": 2000,
        "noise": 0.05,
        "epochs": 500,
        "learning_rate": 0.5,
        "train_fraction": 0.5,
        "seed": 0,
    },
    "storage": {"models_dir": "data/models"},
}

logger = logging.getLogger("ENIR.config")

# Environment variables from config/.env, never overriding the process environment
load_dotenv(os.path.join(PROJECT_ROOT, 'config', '.env'), override=False)


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load settings from a YAML file layered over the built-in defaults.

    Args:
        config_path: Path to a config file or a directory holding config.yaml.
            Falls back to $ENIR_CONFIG, then to config/config.yaml.

    Returns:
        Nested settings dictionary
    """
    config_path = config_path or os.getenv("ENIR_CONFIG") or DEFAULT_CONFIG_PATH
    settings = copy.deepcopy(DEFAULT_SETTINGS)

    if os.path.isdir(config_path):
        config_path = os.path.join(config_path, "config.yaml")

    if os.path.exists(config_path):
        try:
            with open(config_path, 'r') as f:
                loaded = yaml.safe_load(f) or {}
            settings = _merge(settings, loaded)
            logger.debug(f"Loaded configuration from {config_path}")
        except (OSError, yaml.YAMLError) as e:
            # Continue with defaults rather than failing
            logger.warning(f"Failed to load configuration from {config_path}: {e}")
    else:
        logger.warning(f"Configuration file not found: {config_path}")

    level = os.getenv("ENIR_LOG_LEVEL")
    if level:
        settings["logging"]["level"] = level.upper()
    seed = os.getenv("ENIR_SEED")
    if seed:
        try:
            settings["evaluation"]["seed"] = int(seed)
            settings["simulation"]["seed"] = int(seed)
        except ValueError:
            logger.warning(f"Ignoring non-integer ENIR_SEED={seed!r}")
    return settings


def configure_logging(level: str = "INFO", log_file: Optional[str] = None,
                      logs_dir: str = "logs", fmt: str = LOG_FORMAT) -> None:
    """
    Configure root logging for an entry point.

    Args:
        level: Logging level name
        log_file: Optional file name; written under logs_dir with a date suffix
        logs_dir: Log directory, relative to the project root unless absolute
        fmt: Log record format
    """
    handlers = [logging.StreamHandler()]
    if log_file:
        logs_dir = os.path.join(PROJECT_ROOT, logs_dir)
        os.makedirs(logs_dir, exist_ok=True)
        stem, ext = os.path.splitext(log_file)
        dated = f"{stem}_{datetime.now().strftime('%Y%m%d')}{ext or '.log'}"
        handlers.append(logging.FileHandler(os.path.join(logs_dir, dated), 'a'))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=fmt,
        handlers=handlers,
        force=True,
    )


class BaseCalibrator:
    """Base class for all calibration methods to inherit from."""

    method = "base"

    def __init__(self, name: str, config_path: Optional[str] = None):
        """
        Initialize the base calibrator with a name and optional configuration.

        Args:
            name: Name of the calibrator
            config_path: Optional path to a configuration file
        """
        self.name = name
        self.logger = logging.getLogger(f"ENIR.{name}")
        self.config = load_settings(config_path)
        self.fitted = False

    def fit(self, dataset: CalibrationDataset) -> "BaseCalibrator":
        """
        Fit the calibration map on a sorted dataset.
        This method should be overridden by subclasses.
        """
        raise NotImplementedError(f"{self.name} does not implement fit")

    def predict(self, scores) -> np.ndarray:
        """
        Map uncalibrated scores in [0, 1] to calibrated probabilities.
        This method should be overridden by subclasses.
        """
        raise NotImplementedError(f"{self.name} does not implement predict")

    def to_payload(self) -> Dict[str, Any]:
        """Method-specific JSON document for the model file."""
        raise NotImplementedError(f"{self.name} cannot be serialized")

    def load_payload(self, payload: Dict[str, Any]) -> "BaseCalibrator":
        """Restore a fitted calibrator from its model-file payload."""
        raise NotImplementedError(f"{self.name} cannot be deserialized")

    def _require_fitted(self) -> None:
        if not self.fitted:
            raise InvalidInputError(f"{self.name} has not been fitted")

    def summary(self) -> Dict[str, Any]:
        """Short description of the fitted model, printed by the CLI."""
        return {"method": self.method}

    def run(self, dataset: CalibrationDataset) -> Dict[str, Any]:
        """
        Fit the calibrator and report the outcome.

        Args:
            dataset: Training dataset

        Returns:
            Dict containing the status and the model summary
        """
        self.logger.info(f"Fitting {self.method} on {dataset.n} samples")
        try:
            self.fit(dataset)
        except Exception as e:
            self.logger.error(f"Fitting {self.method} failed: {e}")
            return {"status": "error", "success": False, "error": str(e)}
        return {"status": "success", "success": True, **self.summary()}
