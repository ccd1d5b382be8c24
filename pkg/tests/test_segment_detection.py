import math

import numpy as np
import pytest

from voiceface.core.errors import DimensionMismatch, InvalidArgs, InvalidConfig, StreamTooShort, ZeroVector
from voiceface.core.segment_detection import (
    DetectorConfig,
    FrameStream,
    ScoredItem,
    Segment,
    SegmentDetector,
    detect_segments,
    retain_by_thresholds,
    score_items,
    window_score,
)

SIGNAL = [1.0, 0.0]
NOISE = [0.0, 1.0]


def stream_of(rows):
    return FrameStream(np.array(rows, dtype=np.float64))


class TestWindowScore:
    def test_identical_frames(self):
        frames = stream_of([[0.3, 0.4, 1.2]] * 4)
        assert window_score(frames, 0, 4, frames) == pytest.approx(1.0)

    def test_orthogonal_means(self):
        assert window_score(stream_of([NOISE] * 3), 0, 3, stream_of([SIGNAL])) == 0.0

    def test_straight_line_oracle(self):
        rng = np.random.default_rng(0)
        stream = FrameStream(rng.standard_normal((30, 5)))
        truth = FrameStream(rng.standard_normal((8, 5)))
        window = [sum(stream.frames[i][k] for i in range(4, 17)) / 13 for k in range(5)]
        reference = [sum(truth.frames[i][k] for i in range(8)) / 8 for k in range(5)]
        dot = sum(a * b for a, b in zip(window, reference))
        expected = dot / (math.sqrt(sum(a * a for a in window)) * math.sqrt(sum(b * b for b in reference)))
        assert window_score(stream, 4, 17, truth) == pytest.approx(expected, rel=1e-12)

    def test_zero_mean(self):
        with pytest.raises(ZeroVector):
            window_score(stream_of([[1.0, 0.0], [-1.0, 0.0]]), 0, 2, stream_of([SIGNAL]))

    @pytest.mark.parametrize("start,end", [(2, 2), (-1, 2), (0, 5)])
    def test_bad_window(self, start, end):
        with pytest.raises(InvalidArgs):
            window_score(stream_of([SIGNAL] * 4), start, end, stream_of([SIGNAL]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            window_score(stream_of([SIGNAL] * 4), 0, 2, stream_of([[1.0, 0.0, 0.0]]))


class TestDetectSegments:
    def test_noise_only_stream_is_empty(self):
        cfg = DetectorConfig(threshold=0.5, s_min=3, s_max=9, s_step=1)
        assert detect_segments(stream_of([NOISE] * 20), stream_of([SIGNAL] * 2), cfg) == []

    def test_tiled_ground_truth(self):
        frame = [1.0, 2.0, 0.5]
        cfg = DetectorConfig(threshold=0.5, s_min=5, s_max=20, s_step=2)
        segments = detect_segments(stream_of([frame] * 23), stream_of([frame] * 3), cfg)
        assert [(s.start, s.end) for s in segments] == [(0, 5), (5, 10), (10, 15), (15, 20)]
        assert all(s.score == pytest.approx(1.0) for s in segments)

    def test_single_region_trace(self):
        # frames 0-2 noise, 3-8 signal, 9-13 noise; a window holding a signal and b noise frames
        # scores a / sqrt(a^2 + b^2):
        #   [0,2) 0 -> skip; [2,4) 1/sqrt2 -> grow [2,5) 2/sqrt5, [2,6) 3/sqrt10, [2,7) 4/sqrt17,
        #   [2,8) 5/sqrt26, [2,9) 6/sqrt37; [2,10) 6/sqrt40 is lower -> emit [2,9)
        #   [9,11) 0; [11,13) 0; [13,15) leaves the stream -> stop
        rows = [NOISE] * 3 + [SIGNAL] * 6 + [NOISE] * 5
        cfg = DetectorConfig(threshold=0.5, s_min=2, s_max=8, s_step=1)
        segments = detect_segments(stream_of(rows), stream_of([SIGNAL]), cfg)
        assert len(segments) == 1
        assert (segments[0].start, segments[0].end) == (2, 9)
        assert segments[0].score == pytest.approx(6 / math.sqrt(37))

    def test_s_max_caps_growth(self):
        rows = [NOISE] * 3 + [SIGNAL] * 6 + [NOISE] * 5
        cfg = DetectorConfig(threshold=0.5, s_min=2, s_max=4, s_step=1)
        segments = detect_segments(stream_of(rows), stream_of([SIGNAL]), cfg)
        assert [(s.start, s.end) for s in segments] == [(2, 6), (6, 8), (8, 10)]

    def test_silent_stretch_is_skipped(self):
        rows = [SIGNAL] * 4 + [[0.0, 0.0]] * 4 + [SIGNAL] * 4
        cfg = DetectorConfig(threshold=0.5, s_min=2, s_max=4, s_step=1)
        segments = detect_segments(stream_of(rows), stream_of([SIGNAL]), cfg)
        assert [(s.start, s.end) for s in segments] == [(0, 2), (2, 4), (8, 10), (10, 12)]
        assert all(s.score == pytest.approx(1.0) for s in segments)

    def test_silence_never_emitted_with_negative_threshold(self):
        rows = [[0.0, 0.0]] * 6
        cfg = DetectorConfig(threshold=-1.0, s_min=2, s_max=4, s_step=1)
        assert detect_segments(stream_of(rows), stream_of([SIGNAL]), cfg) == []

    def test_silent_ground_truth(self):
        with pytest.raises(ZeroVector):
            detect_segments(stream_of([SIGNAL] * 4), stream_of([[0.0, 0.0]]), DetectorConfig(s_min=2, s_max=4, s_step=1))

    def test_stream_too_short(self):
        with pytest.raises(StreamTooShort):
            detect_segments(stream_of([SIGNAL] * 3), stream_of([SIGNAL]), DetectorConfig(s_min=4, s_max=8, s_step=1))

    @pytest.mark.parametrize("kwargs", [{"s_min": 0}, {"s_min": 10, "s_max": 5}, {"s_step": 0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(InvalidConfig):
            DetectorConfig(**kwargs)

    def test_invariants_on_random_streams(self):
        rng = np.random.default_rng(0)
        for trial in range(1000):
            dim = int(rng.integers(1, 5))
            s_min = int(rng.integers(1, 6))
            cfg = DetectorConfig(
                threshold=float(rng.uniform(-0.5, 0.9)),
                s_min=s_min,
                s_max=s_min + int(rng.integers(0, 12)),
                s_step=int(rng.integers(1, 4)),
            )
            length = s_min + int(rng.integers(0, 60))
            stream = FrameStream(rng.standard_normal((length, dim)) + 0.3)
            truth = FrameStream(rng.standard_normal((3, dim)) + 0.3)
            try:
                segments = SegmentDetector(cfg).detect(stream, truth)
            except ZeroVector:
                continue
            previous_end = 0
            for segment in segments:
                assert previous_end <= segment.start < segment.end <= length
                assert cfg.s_min <= segment.length <= cfg.s_max
                assert segment.score > cfg.threshold
                assert segment.score == pytest.approx(window_score(stream, segment.start, segment.end, truth))
                previous_end = segment.end

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        stream = FrameStream(rng.standard_normal((200, 3)))
        truth = FrameStream(rng.standard_normal((5, 3)))
        cfg = DetectorConfig(threshold=0.2, s_min=5, s_max=40, s_step=3)
        assert detect_segments(stream, truth, cfg) == detect_segments(stream, truth, cfg)

    def test_frame_stream_time(self):
        stream = FrameStream(np.zeros((10, 2)), frame_rate=50.0)
        assert stream.seconds(25) == 0.5
        assert len(stream) == 10 and stream.dim == 2
        with pytest.raises(InvalidArgs):
            FrameStream(np.zeros((2, 2)), frame_rate=0.0)


class TestRetention:
    def test_all_above(self):
        items = [ScoredItem("a", 0.9, "face"), ScoredItem("b", 0.8, "voice")]
        assert retain_by_thresholds(items, 0.5, 0.5) == items

    def test_threshold_above_max(self):
        items = [ScoredItem(i, s, "voice") for i, s in enumerate([0.1, 0.7, 0.99])]
        assert retain_by_thresholds(items, 0.0, 1.0) == []

    def test_mixed_matches_filter(self):
        rng = np.random.default_rng(1)
        items = [
            ScoredItem(k, float(rng.uniform(-1, 1)), "face" if k % 3 else "voice")
            for k in range(100)
        ]
        expected = [item for item in items if item.score > (0.2 if item.modality == "face" else -0.1)]
        assert retain_by_thresholds(items, 0.2, -0.1) == expected

    def test_threshold_is_strict(self):
        assert retain_by_thresholds([ScoredItem("x", 0.5, "face")], 0.5, 0.0) == []

    def test_score_items(self):
        truth = stream_of([SIGNAL, SIGNAL])
        items = score_items([np.array(SIGNAL), np.array(NOISE), np.array([1.0, 1.0])], truth, "face")
        assert [item.payload for item in items] == [0, 1, 2]
        assert [item.score for item in items] == pytest.approx([1.0, 0.0, 1 / math.sqrt(2)])
        kept = retain_by_thresholds(items, face_threshold=0.5, voice_threshold=0.9)
        assert [item.payload for item in kept] == [0, 2]

    def test_score_items_with_segments(self):
        segments = [Segment(0, 4, 0.8), Segment(4, 8, 0.3)]
        items = score_items([np.array(SIGNAL)] * 2, stream_of([SIGNAL]), "voice", payloads=segments)
        assert [item.payload for item in items] == segments
        with pytest.raises(InvalidArgs):
            score_items([np.array(SIGNAL)], stream_of([SIGNAL]), "audio")
