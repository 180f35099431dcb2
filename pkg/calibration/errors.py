"""
Exception hierarchy for the ENIR calibration toolkit.
Library code raises these; the command line front end turns them into exit codes.
"""
from typing import Optional


class CalibrationError(ValueError):
    """Root of every error raised by the calibration package."""


class InvalidInputError(CalibrationError):
    """A value handed to an operation is outside its domain."""


class EmptyDatasetError(CalibrationError):
    """An operation needs at least one sample and got none."""


class InvalidParameterError(CalibrationError):
    """A tuning parameter (bins, folds, noise, ...) is out of range."""


class UndefinedMetricError(CalibrationError):
    """A metric cannot be computed for the given labels, e.g. AUC on one class."""


class ModelFileError(CalibrationError):
    """A model file is missing, corrupt, or of an unknown method or version."""


class ParseError(CalibrationError):
    """A CSV row could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidLabelError(ParseError):
    """A label is not 0 or 1."""
