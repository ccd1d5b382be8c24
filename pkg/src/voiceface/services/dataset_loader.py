"""
Dataset and frame-stream file I/O.

Both formats are JSON Lines with a header line naming the format and version.
Floats are written with Python's shortest round-trip representation, so a
read-back reproduces every value exactly and identical inputs produce identical
bytes.
"""

from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple, Union
import json
import logging

import numpy as np

from voiceface.core.dataset import IdentityRecord, VoiceFaceDataset
from voiceface.core.errors import ArtifactIOError, MalformedFile
from voiceface.core.segment_detection import FrameStream

DATASET_FORMAT = "voiceface-dataset"
FRAMES_FORMAT = "voiceface-frames"
FORMAT_VERSION = 1

# Gender labels as stored on disk
GENDER_CODES = {"male": "m", "female": "f"}
GENDER_NAMES = {code: name for name, code in GENDER_CODES.items()}

PathLike = Union[str, Path]


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


class DatasetLoader:
    """Reads and writes dataset and frame-stream files."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def _lines(self, path: Path) -> Iterator[Tuple[int, Any]]:
        try:
            with open(path, "r", encoding="utf-8") as f:
                for number, line in enumerate(f, start=1):
                    if not line.strip():
                        continue
                    try:
                        yield number, json.loads(line)
                    except json.JSONDecodeError as e:
                        raise MalformedFile(f"{path}:{number}: invalid JSON ({e.msg})") from e
        except OSError as e:
            raise ArtifactIOError(f"Cannot read {path}: {e}") from e

    def _write(self, path: Path, lines: List[str]):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                for line in lines:
                    f.write(line + "\n")
        except OSError as e:
            raise ArtifactIOError(f"Cannot write {path}: {e}") from e

    def _check_header(self, path: Path, header: Dict[str, Any], expected: str):
        if not isinstance(header, dict) or header.get("format") != expected:
            raise MalformedFile(f"{path}: expected a '{expected}' header line")
        if header.get("version") != FORMAT_VERSION:
            raise MalformedFile(f"{path}: unsupported version {header.get('version')}")

    def save_dataset(self, dataset: VoiceFaceDataset, path: PathLike) -> Path:
        """
        Write a dataset file, one sample per line.

        Args:
            dataset: Dataset to write
            path: Output file path

        Returns:
            Path of the written file
        """
        path = Path(path)
        header = {
            "format": DATASET_FORMAT,
            "version": FORMAT_VERSION,
            "voice_dim": dataset.voice_dim if len(dataset) else 0,
            "face_dim": dataset.face_dim if len(dataset) else 0,
        }
        lines = [_dumps(header)]
        for record in dataset:
            for modality in ("voice", "face"):
                for row in record.samples(modality):
                    lines.append(_dumps({
                        "id": record.id,
                        "gender": GENDER_CODES[record.gender],
                        "population": record.population,
                        "modality": modality,
                        "features": [float(v) for v in row],
                    }))
        self._write(path, lines)
        counts = dataset.sample_counts()
        self.logger.info(f"Wrote dataset {path} ({counts['identities']} identities, {len(lines) - 1} samples)")
        return path

    def load_dataset(self, path: PathLike) -> VoiceFaceDataset:
        """
        Read a dataset file; identities keep their first-seen order.

        Raises:
            ArtifactIOError: if the file cannot be read
            MalformedFile: on a missing header or inconsistent records
        """
        path = Path(path)
        lines = self._lines(path)
        first = next(lines, None)
        if first is None:
            raise MalformedFile(f"{path}: empty dataset file")
        self._check_header(path, first[1], DATASET_FORMAT)
        dims = {"voice": int(first[1].get("voice_dim", 0)), "face": int(first[1].get("face_dim", 0))}

        grouped: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()
        for number, sample in lines:
            try:
                identity = str(sample["id"])
                gender = GENDER_NAMES[sample["gender"]]
                modality = sample["modality"]
                features = sample["features"]
                population = str(sample.get("population", ""))
            except (KeyError, TypeError) as e:
                raise MalformedFile(f"{path}:{number}: bad sample record ({e})") from e
            if modality not in dims:
                raise MalformedFile(f"{path}:{number}: unknown modality {modality}")
            entry = grouped.setdefault(
                identity, {"gender": gender, "population": population, "voice": [], "face": []}
            )
            if entry["gender"] != gender or entry["population"] != population:
                raise MalformedFile(f"{path}:{number}: conflicting attributes for identity {identity}")
            entry[modality].append(features)

        records = []
        for identity, entry in grouped.items():
            arrays = {}
            for modality in ("voice", "face"):
                rows = entry[modality]
                try:
                    arrays[modality] = (
                        np.asarray(rows, dtype=np.float64) if rows else np.zeros((0, dims[modality]))
                    )
                except ValueError as e:
                    raise MalformedFile(f"{path}: ragged {modality} features for identity {identity}") from e
                if arrays[modality].ndim != 2:
                    raise MalformedFile(f"{path}: bad {modality} features for identity {identity}")
            records.append(IdentityRecord(identity, entry["gender"], entry["population"], arrays["voice"], arrays["face"]))

        dataset = VoiceFaceDataset(records)
        self.logger.info(f"Loaded dataset {path} ({len(dataset)} identities)")
        return dataset

    def save_frames(self, stream: FrameStream, path: PathLike) -> Path:
        """Write a frame-stream file: header, then one frame vector per line."""
        path = Path(path)
        header = {"format": FRAMES_FORMAT, "version": FORMAT_VERSION, "frame_rate": stream.frame_rate, "dim": stream.dim}
        lines = [_dumps(header)] + [_dumps([float(v) for v in frame]) for frame in stream.frames]
        self._write(path, lines)
        self.logger.debug(f"Wrote {len(stream)} frames to {path}")
        return path

    def load_frames(self, path: PathLike) -> FrameStream:
        """
        Read a frame-stream file.

        Raises:
            ArtifactIOError: if the file cannot be read
            MalformedFile: on a missing header or frames that are not numeric vectors of the header dimension
        """
        path = Path(path)
        lines = self._lines(path)
        first = next(lines, None)
        if first is None:
            raise MalformedFile(f"{path}: empty frame file")
        header = first[1]
        self._check_header(path, header, FRAMES_FORMAT)
        try:
            dim = int(header.get("dim", 0))
            frame_rate = float(header.get("frame_rate", 100.0))
        except (TypeError, ValueError) as e:
            raise MalformedFile(f"{path}: bad frame header") from e
        frames = []
        for number, frame in lines:
            if not isinstance(frame, list) or len(frame) != dim:
                raise MalformedFile(f"{path}:{number}: expected a vector of length {dim}")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in frame):
                raise MalformedFile(f"{path}:{number}: frames must hold numbers only")
            frames.append(frame)
        array = np.asarray(frames, dtype=np.float64) if frames else np.zeros((0, dim))
        if frame_rate <= 0:
            raise MalformedFile(f"{path}: frame_rate must be positive")
        self.logger.info(f"Loaded {len(frames)} frames from {path}")
        return FrameStream(array, frame_rate)
