"""
Model file storage for fitted calibrators.
Models are written as a JSON envelope so that save -> load -> save reproduces
the file byte for byte.
"""
import os
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .base_calibrator import PROJECT_ROOT, BaseCalibrator
from .calibrators import PERSISTABLE_METHODS, build_calibrator
from .errors import ModelFileError

logger = logging.getLogger("ENIR.model_store")

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class ModelFile:
    """Envelope around a method-specific payload."""
    method: str
    payload: Dict[str, Any] = field(default_factory=dict)
    squash: bool = False
    version: int = MODEL_FILE_VERSION

    def to_json(self) -> str:
        document = {
            "method": self.method,
            "version": self.version,
            "squash": self.squash,
            "payload": self.payload,
        }
        return json.dumps(document, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ModelFile":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelFileError(f"model file is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise ModelFileError("model file must hold a JSON object")
        missing = {"method", "version", "payload"} - set(document)
        if missing:
            raise ModelFileError(f"model file lacks {', '.join(sorted(missing))}")
        if document["version"] != MODEL_FILE_VERSION:
            raise ModelFileError(f"unsupported model file version {document['version']!r}")
        if document["method"] not in PERSISTABLE_METHODS:
            raise ModelFileError(f"unknown model method {document['method']!r}")
        if not isinstance(document["payload"], dict):
            raise ModelFileError("model payload must be a JSON object")
        return cls(
            method=document["method"],
            payload=document["payload"],
            squash=bool(document.get("squash", False)),
            version=document["version"],
        )


def default_model_path(settings: Dict[str, Any], method: str) -> str:
    """Model path under the configured models directory (relative to the project root)."""
    return os.path.join(PROJECT_ROOT, settings["storage"]["models_dir"], f"{method}.json")


def write_model_file(model_file: ModelFile, path: str) -> str:
    """
    Write a model file, creating parent directories.

    Args:
        model_file: Envelope to write
        path: Destination path

    Returns:
        The path written
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(model_file.to_json())
    logger.info(f"Model ({model_file.method}) saved to {path}")
    return path


def read_model_file(path: str) -> ModelFile:
    """Read and validate a model file; a missing file is a ModelFileError."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e.strerror or e}") from e
    return ModelFile.from_json(text)


def save_calibrator(calibrator: BaseCalibrator, path: str, squash: bool = False) -> ModelFile:
    """
    Persist a fitted calibrator.

    Args:
        calibrator: Fitted calibrator of a persistable method
        path: Destination path
        squash: Whether the training scores were squashed

    Returns:
        The written ModelFile
    """
    if calibrator.method not in PERSISTABLE_METHODS:
        raise ModelFileError(f"method {calibrator.method!r} has no model file format")
    model_file = ModelFile(method=calibrator.method, payload=calibrator.to_payload(), squash=squash)
    write_model_file(model_file, path)
    return model_file


def load_calibrator(path: str, config_path: Optional[str] = None) -> Tuple[BaseCalibrator, ModelFile]:
    """
    Restore a fitted calibrator from a model file.

    Args:
        path: Model file path
        config_path: Optional configuration for the restored calibrator

    Returns:
        Tuple of (calibrator, ModelFile)
    """
    model_file = read_model_file(path)
    calibrator = build_calibrator(model_file.method, config_path=config_path)
    try:
        calibrator.load_payload(model_file.payload)
    except (ValueError, TypeError) as e:
        raise ModelFileError(f"corrupt {model_file.method} payload in {path}: {e}") from e
    logger.info(f"Model ({model_file.method}) loaded from {path}")
    return calibrator, model_file
