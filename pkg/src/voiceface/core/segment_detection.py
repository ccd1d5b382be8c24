"""
Growing-window speech segment detection and threshold-based retention.

A window starts at ``[0, s_min)``. While it scores above the threshold and
growing it by ``s_step`` frames strictly raises its score (without exceeding
``s_max`` or the stream), it grows. Otherwise it is emitted when its score is
above the threshold, and the search restarts right after it.
"""

from dataclasses import dataclass
from typing import Any, Iterable, List, Sequence
import logging

import numpy as np

from voiceface.core.errors import DimensionMismatch, InvalidArgs, InvalidConfig, StreamTooShort, ZeroVector
from voiceface.core.metric_space import EPSILON


@dataclass
class FrameStream:
    """Per-frame feature vectors, one row per time unit."""

    frames: np.ndarray
    frame_rate: float = 100.0

    def __post_init__(self):
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=np.float64))
        if self.frame_rate <= 0:
            raise InvalidArgs("frame_rate must be positive")

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    def seconds(self, frame: int) -> float:
        return frame / self.frame_rate


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold and window sizes (in frames) for segment detection."""

    threshold: float = 0.5
    s_min: int = 50
    s_max: int = 500
    s_step: int = 10

    def validate(self) -> tuple[bool, List[str]]:
        errors = []
        if self.s_min < 1:
            errors.append("s_min must be >= 1")
        if self.s_max < self.s_min:
            errors.append("s_max must be >= s_min")
        if self.s_step < 1:
            errors.append("s_step must be >= 1")
        return len(errors) == 0, errors

    def __post_init__(self):
        is_valid, errors = self.validate()
        if not is_valid:
            raise InvalidConfig(f"Invalid detector configuration: {', '.join(errors)}")


@dataclass(frozen=True)
class Segment:
    """Half-open frame interval ``[start, end)`` with its score."""

    start: int
    end: int
    score: float

    @property
    def length(self) -> int:
        return self.end - self.start


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a <= EPSILON or norm_b <= EPSILON:
        raise ZeroVector("cannot score against an all-zero mean vector")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


def _reference(ground_truth: FrameStream, dim: int) -> np.ndarray:
    if ground_truth.dim != dim:
        raise DimensionMismatch(f"stream dim {dim} != ground truth dim {ground_truth.dim}")
    if len(ground_truth) == 0:
        raise StreamTooShort("ground truth has no frames")
    return ground_truth.frames.mean(axis=0)


def window_score(stream: FrameStream, start: int, end: int, ground_truth: FrameStream) -> float:
    """
    Cosine similarity between the mean of ``stream[start:end]`` and the mean
    ground-truth frame.

    Raises:
        InvalidArgs: for empty or out-of-range windows
        ZeroVector: if either mean is all-zero
    """
    if not 0 <= start < end <= len(stream):
        raise InvalidArgs(f"invalid window [{start}, {end}) for stream of length {len(stream)}")
    reference = _reference(ground_truth, stream.dim)
    return _cosine(stream.frames[start:end].mean(axis=0), reference)


class SegmentDetector:
    """Runs the growing-window search over one stream."""

    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        self.logger = logging.getLogger(__name__)

    def detect(self, stream: FrameStream, ground_truth: FrameStream) -> List[Segment]:
        cfg = self.cfg
        length = len(stream)
        if length < cfg.s_min:
            raise StreamTooShort(f"stream has {length} frames, fewer than s_min={cfg.s_min}")
        reference = _reference(ground_truth, stream.dim)
        if np.linalg.norm(reference) <= EPSILON:
            raise ZeroVector("ground truth mean is an all-zero vector")

        def score(start: int, end: int) -> float:
            mean = stream.frames[start:end].mean(axis=0)
            # silent windows never count as speech
            if np.linalg.norm(mean) <= EPSILON:
                return float("-inf")
            return _cosine(mean, reference)

        segments: List[Segment] = []
        start, end = 0, cfg.s_min
        current = score(start, end)
        while end <= length:
            grown = end + cfg.s_step
            if current > cfg.threshold and grown <= length and grown - start <= cfg.s_max:
                extended = score(start, grown)
                if extended > current:
                    end, current = grown, extended
                    continue
            if current > cfg.threshold:
                segments.append(Segment(start, end, current))
            start, end = end, end + cfg.s_min
            if end <= length:
                current = score(start, end)

        self.logger.debug(f"Detected {len(segments)} segment(s) in {length} frames")
        return segments


def detect_segments(stream: FrameStream, ground_truth: FrameStream, cfg: DetectorConfig) -> List[Segment]:
    """
    Detect segments of ``stream`` that resemble the ground truth.

    Args:
        stream: Frames to search
        ground_truth: Reference frames of the target speaker
        cfg: Threshold and window sizes

    Returns:
        Disjoint segments ordered by start, each scoring above the threshold

    Raises:
        StreamTooShort: if the stream is shorter than ``s_min``
        ZeroVector: if the ground-truth mean is all-zero
    """
    return SegmentDetector(cfg).detect(stream, ground_truth)


@dataclass(frozen=True)
class ScoredItem:
    """A collected face crop or speech segment with its ground-truth similarity."""

    payload: Any
    score: float
    modality: str = "voice"


def score_items(
    vectors: Sequence[np.ndarray], ground_truth: FrameStream, modality: str, payloads: Sequence[Any] = None
) -> List[ScoredItem]:
    """Score each vector by cosine similarity with the mean ground-truth frame."""
    if modality not in ("voice", "face"):
        raise InvalidArgs(f"Unknown modality: {modality}")
    vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
    payloads = list(payloads) if payloads is not None else list(range(len(vectors)))
    if len(payloads) != len(vectors):
        raise InvalidArgs("payloads and vectors differ in length")
    if not vectors:
        return []
    reference = _reference(ground_truth, vectors[0].shape[-1])
    return [ScoredItem(p, _cosine(v, reference), modality) for p, v in zip(payloads, vectors)]


def retain_by_thresholds(items: Iterable[ScoredItem], face_threshold: float, voice_threshold: float) -> List[ScoredItem]:
    """Keep items scoring strictly above their modality's threshold, in input order."""
    thresholds = {"face": face_threshold, "voice": voice_threshold}
    return [item for item in items if item.score > thresholds[item.modality]]
