"""
Checkpoint persistence for modality pairs.
"""

from pathlib import Path
from typing import Any, Dict, Union
import json
import logging

from voiceface.core.embedder import ModalityPair
from voiceface.core.errors import ArtifactIOError, InvalidConfig, MalformedFile

CHECKPOINT_FORMAT = "voiceface-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointStore:
    """Saves and loads checkpoints as JSON with round-trip-exact floats."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def to_json(self, pair: ModalityPair) -> str:
        document: Dict[str, Any] = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION}
        document.update(pair.to_dict())
        return json.dumps(document, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"

    def save(self, pair: ModalityPair, path: Union[str, Path]) -> Path:
        """
        Write a checkpoint file.

        Args:
            pair: Embedders and metric space
            path: Output path

        Returns:
            Path of the written checkpoint
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_json(pair), encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Cannot write checkpoint {path}: {e}") from e
        self.logger.info(f"Saved checkpoint: {path}")
        return path

    def load(self, path: Union[str, Path]) -> ModalityPair:
        """
        Read a checkpoint file.

        Raises:
            ArtifactIOError: if the file cannot be read
            MalformedFile: if it is not a checkpoint of a supported version
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Cannot read checkpoint {path}: {e}") from e
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise MalformedFile(f"{path}: invalid JSON ({e.msg})") from e
        if not isinstance(document, dict) or document.get("format") != CHECKPOINT_FORMAT:
            raise MalformedFile(f"{path}: not a checkpoint file")
        if document.get("version") != CHECKPOINT_VERSION:
            raise MalformedFile(f"{path}: unsupported checkpoint version {document.get('version')}")
        try:
            pair = ModalityPair.from_dict(document)
        except (KeyError, TypeError, ValueError, InvalidConfig) as e:
            raise MalformedFile(f"{path}: invalid checkpoint content ({e})") from e
        self.logger.info(f"Loaded checkpoint: {path}")
        return pair
